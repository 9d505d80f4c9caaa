from rest_framework import serializers

from .penalties import PENALTY_CHOICES, MIN_THETA

FORMAT_NAME = 'bsonata-instance'
FORMAT_VERSION = 1


class InstanceManifestSerializer(serializers.Serializer):
    """Validates ``manifest.json`` of a stored instance."""
    format = serializers.ChoiceField(choices=[FORMAT_NAME])
    version = serializers.IntegerField()
    agent_count = serializers.IntegerField(min_value=1)
    dimension = serializers.IntegerField(min_value=1)
    rows = serializers.ListField(child=serializers.IntegerField(min_value=1), min_length=1)
    lam = serializers.FloatField(min_value=0)
    theta = serializers.FloatField(min_value=MIN_THETA)
    penalty = serializers.ChoiceField(choices=PENALTY_CHOICES)
    box = serializers.ListField(
        child=serializers.FloatField(allow_null=True), min_length=2, max_length=2,
        help_text='[k_lower, k_upper]; null stands for an unbounded side',
    )
    partition = serializers.ListField(
        child=serializers.ListField(child=serializers.IntegerField(min_value=0), min_length=1),
        min_length=1,
    )
    has_ground_truth = serializers.BooleanField()

    def validate_version(self, value):
        if value != FORMAT_VERSION:
            raise serializers.ValidationError(f'unsupported format version {value}')
        return value

    def validate(self, data):
        if len(data['rows']) != data['agent_count']:
            raise serializers.ValidationError('rows must list one count per agent')
        covered = sorted(k for block in data['partition'] for k in block)
        if covered != list(range(data['dimension'])):
            raise serializers.ValidationError('partition must cover 0..dimension-1 exactly once')
        lower, upper = data['box']
        if lower is not None and upper is not None and lower > upper:
            raise serializers.ValidationError('box lower bound exceeds upper bound')
        return data
