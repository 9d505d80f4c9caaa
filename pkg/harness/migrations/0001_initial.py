# Generated by Django 6.0.2 on 2026-03-02 10:41

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('name', models.CharField(blank=True, max_length=100)),
                ('variant', models.CharField(choices=[('atc', 'adapt then combine'), ('cta', 'combine then adapt'), ('ghat', 'adapt then combine with block-wise gradients'), ('baseline', 'distributed subgradient projection')], max_length=20)),
                ('blocks', models.PositiveIntegerField()),
                ('seed', models.BigIntegerField()),
                ('schedule_rule', models.CharField(choices=[('round_robin', 'round robin'), ('shuffled_cyclic', 'shuffled cyclic')], max_length=30)),
                ('surrogate', models.CharField(choices=[('plain_linearization', 'linearized loss, tau||.||^2 proximal term'), ('dc_linearization', 'linearized loss and concave penalty part, (tau/2)||.||^2 proximal term')], max_length=30)),
                ('config', models.JSONField(help_text='TOML-shaped run configuration')),
                ('status', models.CharField(choices=[('converged', 'Reached the J tolerance'), ('max_rounds', 'Stopped at max_rounds')], max_length=20)),
                ('t_end', models.PositiveIntegerField(blank=True, help_text='First round with J below the tolerance', null=True)),
                ('rounds', models.PositiveIntegerField(default=0)),
                ('message_exchanges', models.FloatField(default=0)),
                ('final_J', models.FloatField()),
                ('final_D', models.FloatField()),
                ('final_R', models.FloatField()),
                ('stationarity_residual', models.FloatField(blank=True, null=True)),
                ('algebraic_connectivity', models.FloatField()),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'db_table': 'experiment_run',
                'ordering': ['-created_at', '-id'],
            },
        ),
        migrations.CreateModel(
            name='MetricSample',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('t', models.PositiveIntegerField()),
                ('message_exchanges', models.FloatField()),
                ('J', models.FloatField()),
                ('D', models.FloatField()),
                ('R', models.FloatField()),
                ('tracking_residual', models.FloatField()),
                ('V', models.FloatField()),
                ('gamma', models.FloatField()),
                ('delta_sum', models.FloatField()),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='samples', to='harness.experimentrun')),
            ],
            options={
                'db_table': 'metric_sample',
                'ordering': ['run_id', 't'],
                'constraints': [models.UniqueConstraint(fields=('run', 't'), name='unique_sample_per_round')],
            },
        ),
    ]
