from django.urls import path
from . import views

urlpatterns = [
    path('', views.ExperimentRunListView.as_view(), name='run-list'),
    path('<int:pk>/', views.ExperimentRunDetailView.as_view(), name='run-detail'),
    path('<int:pk>/metrics/', views.ExperimentRunMetricsView.as_view(), name='run-metrics'),
]
