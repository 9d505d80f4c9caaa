from rest_framework import serializers

from core.rounds import VARIANT_CHOICES
from core.surrogate import SURROGATE_CHOICES, PLAIN_LINEARIZATION
from problems.penalties import PENALTY_CHOICES, PENALTY_L1, MIN_THETA
from schedule.rules import RULE_CHOICES
from .config import (
    BASELINE, BASELINE_STEP_CHOICES, GraphConfig, ProblemConfig, AlgorithmConfig, RunSettings, RunConfig,
)
from .models import ExperimentRun, MetricSample


# ─────────────────────────────────────────────
# Run configuration documents
# ─────────────────────────────────────────────

class StrictSerializer(serializers.Serializer):
    """Rejects keys that no field declares."""

    def to_internal_value(self, data):
        if isinstance(data, dict):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: ['unknown key'] for key in unknown})
        return super().to_internal_value(data)


class GraphSectionSerializer(StrictSerializer):
    n = serializers.IntegerField(min_value=1, required=False)
    p = serializers.FloatField(required=False)
    max_retries = serializers.IntegerField(min_value=1, required=False)

    def validate_p(self, value):
        if not 0 < value <= 1:
            raise serializers.ValidationError('p must lie in (0, 1]')
        return value


class ProblemSectionSerializer(StrictSerializer):
    m = serializers.IntegerField(min_value=1, required=False)
    n_i = serializers.IntegerField(min_value=1, required=False)
    sparsity_frac = serializers.FloatField(min_value=0, required=False)
    noise_var = serializers.FloatField(min_value=0, required=False)
    theta = serializers.FloatField(min_value=MIN_THETA, required=False)
    box = serializers.ListField(child=serializers.FloatField(), min_length=2,
                                max_length=2, required=False)
    penalty = serializers.ChoiceField(choices=PENALTY_CHOICES, required=False)

    def get_fields(self):
        fields = super().get_fields()
        # ``lambda`` is a keyword, so the field is attached here.
        fields['lambda'] = serializers.FloatField(source='lam', min_value=0, required=False)
        return fields

    def validate_sparsity_frac(self, value):
        if value >= 1:
            raise serializers.ValidationError('sparsity_frac must be below 1')
        return value

    def validate_box(self, value):
        lower, upper = value
        if lower > upper:
            raise serializers.ValidationError('box lower bound exceeds upper bound')
        return tuple(value)


class AlgorithmSectionSerializer(StrictSerializer):
    variant = serializers.ChoiceField(choices=VARIANT_CHOICES + ((BASELINE, BASELINE),), required=False)
    schedule_rule = serializers.ChoiceField(choices=RULE_CHOICES, required=False)
    gamma0 = serializers.FloatField(required=False)
    mu = serializers.FloatField(required=False)
    tau = serializers.FloatField(required=False)
    surrogate = serializers.ChoiceField(choices=SURROGATE_CHOICES, required=False)
    baseline_step = serializers.ChoiceField(choices=BASELINE_STEP_CHOICES, required=False)

    def get_fields(self):
        fields = super().get_fields()
        fields['B'] = serializers.IntegerField(source='blocks', min_value=1, required=False)
        return fields

    def validate_gamma0(self, value):
        if not 0 < value <= 1:
            raise serializers.ValidationError('gamma0 must lie in (0, 1]')
        return value

    def validate_mu(self, value):
        if value <= 0:
            raise serializers.ValidationError('mu must be positive')
        return value

    def validate_tau(self, value):
        if value <= 0:
            raise serializers.ValidationError('tau must be positive')
        return value


class RunSectionSerializer(StrictSerializer):
    max_rounds = serializers.IntegerField(min_value=0, required=False)
    metrics_stride = serializers.IntegerField(min_value=1, required=False)
    stop_tol_J = serializers.FloatField(min_value=0, required=False)


class RunConfigSerializer(StrictSerializer):
    seed = serializers.IntegerField(min_value=0, required=False)
    graph = GraphSectionSerializer(required=False)
    problem = ProblemSectionSerializer(required=False)
    algorithm = AlgorithmSectionSerializer(required=False)
    run = RunSectionSerializer(required=False)

    def validate(self, data):
        problem = ProblemConfig(**data.get('problem', {}))
        algorithm = AlgorithmConfig(**data.get('algorithm', {}))
        errors = {}
        if problem.m % algorithm.blocks:
            errors['algorithm'] = [f'B={algorithm.blocks} does not divide m={problem.m}']
        elif algorithm.mu * algorithm.gamma0 >= 1:
            errors['algorithm'] = ['mu * gamma0 must be below 1']
        elif (algorithm.surrogate == PLAIN_LINEARIZATION
              and problem.penalty != PENALTY_L1 and problem.lam != 0):
            errors['algorithm'] = ['plain_linearization needs the l1 penalty or lambda = 0']
        if errors:
            raise serializers.ValidationError(errors)
        return data

    def to_config(self):
        data = self.validated_data
        return RunConfig(
            seed=data.get('seed', RunConfig.seed),
            graph=GraphConfig(**data.get('graph', {})),
            problem=ProblemConfig(**data.get('problem', {})),
            algorithm=AlgorithmConfig(**data.get('algorithm', {})),
            run=RunSettings(**data.get('run', {})),
        )


# ─────────────────────────────────────────────
# Stored runs
# ─────────────────────────────────────────────

class MetricSampleSerializer(serializers.ModelSerializer):
    class Meta:
        model = MetricSample
        exclude = ['id', 'run']


class ExperimentRunSerializer(serializers.ModelSerializer):
    sample_count = serializers.IntegerField(source='samples.count', read_only=True)

    class Meta:
        model = ExperimentRun
        fields = '__all__'
        read_only_fields = [f.name for f in ExperimentRun._meta.fields]
