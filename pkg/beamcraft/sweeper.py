"""
Monte Carlo sweeps over SNR or snapshot count.

Trial t of every axis point uses the seed derived from (master_seed, t), so
all methods and axis values see common random draws. Trials run as worker
threads and the records are sorted before they are returned or written, so
the output does not depend on scheduling.
"""
import asyncio
import os
from dataclasses import dataclass, field, replace
import numpy as np
import pandas as pd
from .array_geometry import ArrayConfig, steering_vector
from .cg_solver import direct_weights, smi_weights
from .metrics import output_sinr, scattering_optimal
from .pipeline import CmrIspsBeamformer, PipelineConfig
from .scene_simulator import Scenario, simulate
from .spectrum import sample_covariance
from .errors import ConfigurationError
from .debug import Debug as debug
from . import utils

METHODS = ('cmr-isps', 'cmr-isps-direct', 'smi', 'capon-baseline', 'optimal')
AXES = ('snr', 'snapshots')
RECORD_COLUMNS = ['method', 'axis_name', 'axis_value', 'trial', 'seed', 'output_sinr_db', 'optimal_sinr_db']
SUMMARY_COLUMNS = ['method', 'axis_name', 'axis_value', 'mean_db', 'std_db', 'n']


@dataclass(frozen=True)
class SweepSpec:
    scenario: Scenario = field(default_factory=Scenario)
    axis_name: str = 'snr'
    axis_values: tuple = tuple(range(-20, 25, 5))
    trials: int = 100
    methods: tuple = ('cmr-isps', 'smi', 'optimal')
    master_seed: int = 0
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    workers: int = 4

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigurationError(f'Need at least one trial, got {self.trials}')
        if self.axis_name not in AXES:
            raise ConfigurationError(f'Unknown sweep axis: {self.axis_name}')
        if len(self.axis_values) == 0:
            raise ConfigurationError('Sweep axis is empty')
        unknown = set(self.methods) - set(METHODS)
        if unknown or not self.methods:
            raise ConfigurationError(f'Unknown methods: {sorted(unknown)}. Choose from {METHODS}')
        if self.axis_name == 'snr' and self.scenario.soi is None:
            raise ConfigurationError('An SNR sweep needs a signal of interest')
        object.__setattr__(self, 'axis_values', tuple(self.axis_values))
        object.__setattr__(self, 'methods', tuple(self.methods))

    def scenario_at(self, value, seed):
        if self.axis_name == 'snr':
            scenario = replace(self.scenario, soi=replace(self.scenario.soi, power_db=float(value)))
        else:
            scenario = replace(self.scenario, snapshots=int(value))
        return scenario.with_seed(seed)


@dataclass
class SweepResult:
    records: pd.DataFrame
    summary: pd.DataFrame

    def write(self, out_dir, prefix='sweep'):
        out_dir = utils.get_output_path(out_dir)
        return (utils.write_csv(self.records, os.path.join(out_dir, f'{prefix}_records.csv')),
                utils.write_csv(self.summary, os.path.join(out_dir, f'{prefix}_summary.csv')))


def summarize(records: pd.DataFrame) -> pd.DataFrame:
    grouped = records.groupby(['method', 'axis_name', 'axis_value'], sort=True)['output_sinr_db']
    summary = grouped.agg(mean_db='mean', std_db='std', n='count').reset_index()
    return summary[SUMMARY_COLUMNS]


class Sweeper:
    def __init__(self, spec: SweepSpec):
        self.spec = spec
        self.done = 0

    def run_trial(self, value, trial):
        """Every requested method on one simulated block; failures become NaN rows."""
        spec = self.spec
        seed = utils.derive_seed(spec.master_seed, trial)
        scenario = spec.scenario_at(value, seed)
        snap = simulate(scenario)
        beamformer = CmrIspsBeamformer(spec.pipeline)
        trace, weights = None, {}

        def attempt(method, solve):
            try:
                weights[method] = solve()
            except Exception as e:
                debug.log_warning(f'<{method}> failed at {spec.axis_name}={value}, trial {trial}: {e}')

        needs_pipeline = {'cmr-isps', 'cmr-isps-direct', 'capon-baseline'} & set(spec.methods)
        if needs_pipeline:
            try:
                weights['cmr-isps'], trace = beamformer.main(snap)
            except Exception as e:
                debug.log_warning(f'Pipeline failed at {spec.axis_name}={value}, trial {trial}: {e}')
        if trace is not None:
            if 'cmr-isps-direct' in spec.methods:
                attempt('cmr-isps-direct', lambda: direct_weights(trace.inc, trace.soi.a_hat))
            if 'capon-baseline' in spec.methods:
                attempt('capon-baseline', lambda: beamformer.capon_baseline(snap, trace))
        if 'smi' in spec.methods:
            presumed = steering_vector(ArrayConfig(m=snap.m, spacing_wavelengths=scenario.array.spacing_wavelengths),
                                       np.deg2rad(scenario.presumed_soi_deg)).values
            attempt('smi', lambda: smi_weights(trace.covariance if trace else sample_covariance(snap), presumed))
        if 'optimal' in spec.methods:
            attempt('optimal', lambda: scattering_optimal(snap.truth.r_s, snap.truth.r_in))

        rows = []
        for method in spec.methods:
            report = output_sinr(weights[method], snap.truth) if method in weights else None
            rows.append({'method': method, 'axis_name': spec.axis_name, 'axis_value': float(value),
                         'trial': trial, 'seed': seed,
                         'output_sinr_db': report.output_sinr_db if report else np.nan,
                         'optimal_sinr_db': report.optimal_sinr_db if report else np.nan})
        return rows

    async def _run_one(self, semaphore, value, trial, total):
        async with semaphore:
            rows = await asyncio.to_thread(self.run_trial, value, trial)
        self.done += 1
        utils.progress_bar(self.done, total, message='Sweep')
        return rows

    async def main(self) -> SweepResult:
        spec = self.spec
        debug.log_info(f'Sweeping <{spec.axis_name}> over <{len(spec.axis_values)}> points, '
                       f'<{spec.trials}> trials, methods <{", ".join(spec.methods)}>')
        semaphore = asyncio.Semaphore(max(1, spec.workers))
        jobs = [(value, trial) for value in spec.axis_values for trial in range(spec.trials)]
        results = await asyncio.gather(*[self._run_one(semaphore, v, t, len(jobs)) for v, t in jobs])
        records = pd.DataFrame([row for rows in results for row in rows], columns=RECORD_COLUMNS)
        records = records.sort_values(['method', 'axis_value', 'trial'], kind='mergesort').reset_index(drop=True)
        summary = summarize(records)
        for row in summary.itertuples():
            debug.log_stat(f'{row.method} {row.axis_name}={row.axis_value:g}: {row.mean_db:.2f} dB (n={row.n})')
        return SweepResult(records=records, summary=summary)


def run_sweep(spec: SweepSpec) -> SweepResult:
    return asyncio.run(Sweeper(spec).main())
