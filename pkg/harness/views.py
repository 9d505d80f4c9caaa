from rest_framework import status, permissions, filters
from rest_framework.generics import ListAPIView
from rest_framework.response import Response
from rest_framework.views import APIView
from django_filters.rest_framework import DjangoFilterBackend
from django_filters import rest_framework as df_filters
from drf_spectacular.utils import extend_schema

from .models import ExperimentRun, MetricSample, RUN_VARIANT_CHOICES, STATUS_CHOICES
from .serializers import ExperimentRunSerializer, MetricSampleSerializer


# ─────────────────────────────────────────────
# Filters
# ─────────────────────────────────────────────

class ExperimentRunFilter(df_filters.FilterSet):
    variant = df_filters.ChoiceFilter(choices=RUN_VARIANT_CHOICES)
    status = df_filters.ChoiceFilter(choices=STATUS_CHOICES)
    blocks = df_filters.NumberFilter(field_name='blocks')
    seed = df_filters.NumberFilter(field_name='seed')

    class Meta:
        model = ExperimentRun
        fields = ['variant', 'blocks', 'status', 'seed', 'schedule_rule']


# ─────────────────────────────────────────────
# Stored runs
# ─────────────────────────────────────────────

@extend_schema(tags=['Runs'], responses={200: ExperimentRunSerializer})
class ExperimentRunListView(ListAPIView):
    """
    List stored runs, newest first.
    Filter by ?variant=, ?blocks=, ?status=, ?seed=, ?schedule_rule=
    """
    permission_classes = [permissions.AllowAny]
    serializer_class = ExperimentRunSerializer
    filter_backends = [DjangoFilterBackend, filters.OrderingFilter]
    filterset_class = ExperimentRunFilter
    ordering_fields = ['created_at', 'blocks', 't_end', 'final_J']
    queryset = ExperimentRun.objects.all()


@extend_schema(tags=['Runs'], responses={200: ExperimentRunSerializer})
class ExperimentRunDetailView(APIView):
    permission_classes = [permissions.AllowAny]

    def get(self, request, pk):
        try:
            run = ExperimentRun.objects.get(pk=pk)
        except ExperimentRun.DoesNotExist:
            return Response({'message': 'Run not found.'}, status=status.HTTP_404_NOT_FOUND)
        return Response(ExperimentRunSerializer(run).data)


@extend_schema(tags=['Runs'], responses={200: MetricSampleSerializer})
class ExperimentRunMetricsView(ListAPIView):
    """Metric samples of one run in round order."""
    permission_classes = [permissions.AllowAny]
    serializer_class = MetricSampleSerializer
    filter_backends = []

    def get_queryset(self):
        return MetricSample.objects.filter(run_id=self.kwargs['pk']).order_by('t')

    def list(self, request, *args, **kwargs):
        if not ExperimentRun.objects.filter(pk=kwargs['pk']).exists():
            return Response({'message': 'Run not found.'}, status=status.HTTP_404_NOT_FOUND)
        return super().list(request, *args, **kwargs)
