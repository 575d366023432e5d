"""
Run orchestration: dispatches a validated RunConfig to the modules and persists the results
"""
import math
import platform
import time
from dataclasses import replace
from typing import Any, Callable, Dict, List, Optional, Tuple

import joblib
import numpy as np
import pandas as pd

from ... import __version__
from ...config.run_config import RunConfig, RunManifest, config_hash
from ...core.exceptions import ConfigRejected, NSFError, RunError, StiffnessBreakdown
from ...models import (
    DIAGNOSTICS_COLUMNS,
    ExtendedState,
    Forcing,
    Parameters,
    State,
    record_summary,
)
from ..metric import PhaseMetric, make_observable, tail_bound
from ..semigroup import ExtendedSemigroup, stopping_time
from ..solver import lower_bound_monitor
from ..statistics import EnsembleEngine, observable_table, replicate_seed, sample_initial_data
from ...utils.logging_utils import setup_logger
from ...utils.result_exporter import ResultExporter

MANIFEST_FILE = 'manifest.json'


class RunOrchestrator:
    """
    Runs one configuration in its mode and writes every output file

    Each mode handler returns the stopping records it wants in the
    manifest; all files go through a single ResultExporter.
    """

    def __init__(self, default_workers: int = 1):
        """
        Initialize run orchestrator

        Args:
            default_workers: Worker pool size when the config leaves it unset
        """
        self.default_workers = max(1, int(default_workers))
        self.logger = setup_logger("RunOrchestrator")
        self._handlers: Dict[str, Callable[[RunConfig, ResultExporter], List[Dict[str, Any]]]] = {
            'solve': self._run_solve,
            'stability': self._run_stability,
            'metric-probe': self._run_metric_probe,
            'ensemble': self._run_ensemble,
            'slln-study': self._run_slln,
            'markov-check': self._run_markov,
        }

    def run(self, config: RunConfig) -> RunManifest:
        """
        Execute the configured mode

        Returns:
            The manifest, also written as manifest.json next to the outputs

        Raises:
            ConfigRejected: If the mode is unknown
            RunError: For any module failure, with the mode as context
        """
        handler = self._handlers.get(config.mode)
        if handler is None:
            raise ConfigRejected([f"mode: no handler for {config.mode!r}"])

        exporter = ResultExporter(config.output_dir or 'output')
        self.logger.info(f"Starting {config.mode} run into {exporter.output_dir}")
        started = time.perf_counter()
        try:
            records = handler(config, exporter)
        except RunError:
            raise
        except StiffnessBreakdown as e:
            raise RunError(str(e), context=f"mode={config.mode}, stiffness breakdown") from e
        except NSFError as e:
            raise RunError(str(e), context=f"mode={config.mode}") from e
        except ValueError as e:
            raise RunError(str(e), context=f"mode={config.mode}, invalid input") from e
        wall_time = time.perf_counter() - started

        manifest = RunManifest(
            config_hash=config_hash(config),
            mode=config.mode,
            schema_version=config.schema_version,
            versions=self.versions(),
            wall_time=wall_time,
            stopping_records=records,
            files=exporter.inventory(),
            presentation_files=list(exporter.presentation),
            config=config.to_dict(),
        )
        manifest.write(exporter.get_file_path(MANIFEST_FILE))
        self.logger.info(f"Run finished in {wall_time:.2f}s, {len(manifest.files)} file(s) written")
        return manifest

    @staticmethod
    def versions() -> Dict[str, str]:
        return {
            'nsf_stat': __version__,
            'python': platform.python_version(),
            'numpy': np.__version__,
            'pandas': pd.__version__,
            'joblib': joblib.__version__,
        }

    def _workers(self, config: RunConfig) -> int:
        return config.workers or self.default_workers

    def _semigroup(self, config: RunConfig, forcing: Optional[Forcing] = None) -> ExtendedSemigroup:
        return ExtendedSemigroup(
            config.grid, config.params, forcing or config.build_forcing(),
            config.solver, config.stopping, config.metric,
        )

    def _engine(self, config: RunConfig) -> EnsembleEngine:
        defaults = {'c_v': config.params.c_v, 'q': config.metric.q}
        observables = [make_observable(**{**defaults, **spec}) for spec in config.observables] or None
        return EnsembleEngine(
            config.params, config.build_forcing(), config.solver, config.stopping, config.metric,
            observables=observables, workers=self._workers(config), moment_cutoff=config.moment_cutoff,
        )

    # ------------------------------------------------------------------
    # single trajectories
    # ------------------------------------------------------------------

    def _run_solve(self, config: RunConfig, exporter: ResultExporter) -> List[Dict[str, Any]]:
        """One trajectory: diagnostics, positivity floors and the final state"""
        forcing = config.build_forcing()
        semigroup = self._semigroup(config, forcing)
        trajectory = semigroup.solver.solve(
            config.build_initial(), config.t_end,
            output_times=config.times, stop_check=semigroup.stop_condition,
        )
        record = stopping_time(trajectory, config.stopping)

        exporter.export_csv('diagnostics.csv', [r.to_row() for r in trajectory.diagnostics],
                            columns=DIAGNOSTICS_COLUMNS)
        bounds = lower_bound_monitor(trajectory, config.params.c_v)
        exporter.export_csv('lower_bounds.csv', bounds.to_frame())
        exporter.export_snapshot('final_state.bin', config.grid, trajectory.final_state.to_array())
        if bounds.violated:
            self.logger.warning("Observed minima fell below the predicted positivity floors")
        return [{'member': 0, **record.to_dict()}]

    def _run_stability(self, config: RunConfig, exporter: ResultExporter) -> List[Dict[str, Any]]:
        semigroup = self._semigroup(config)
        settings = config.stability
        report = semigroup.stability_probe(config.build_initial(), settings['deltas'], float(settings['t']))
        frame = report.to_frame()
        frame['fitted_order'] = report.fitted_order
        exporter.export_csv('stability.csv', frame)
        self.logger.info(f"Stability fitted order {report.fitted_order:.3f} at t={report.time}")
        return []

    def _run_metric_probe(self, config: RunConfig, exporter: ResultExporter) -> List[Dict[str, Any]]:
        """
        Metric sanity table: truncation gaps between K and 2K, triangle slack
        on consecutive sample triples, and a ray of growing states toward U_inf
        """
        settings = config.metric_probe
        pairs = int(settings['pairs'])
        metric = PhaseMetric(config.metric)
        fine = PhaseMetric(replace(config.metric, K=2 * config.metric.K))
        bound = tail_bound(config.metric.K, config.grid.dim)

        samples = [ExtendedState(s) for s in sample_initial_data(config.distribution, pairs + 2)]
        embedded = [metric.embed(p) for p in samples]
        embedded_fine = [fine.embed(p) for p in samples]
        rows = []
        for i in range(pairs):
            d_ab = metric.distance_embedded(embedded[i], embedded[i + 1])
            d_bc = metric.distance_embedded(embedded[i + 1], embedded[i + 2])
            d_ac = metric.distance_embedded(embedded[i], embedded[i + 2])
            d_fine = fine.distance_embedded(embedded_fine[i], embedded_fine[i + 1])
            rows.append({
                'kind': 'pair', 'index': i, 'scale': 1.0, 'distance': d_ab, 'distance_2K': d_fine,
                'truncation_gap': abs(d_fine - d_ab), 'tail_bound': bound,
                'triangle_slack': d_ab + d_bc - d_ac,
            })

        infinity = metric.embed(ExtendedState.infinity())
        base = config.build_initial().to_array()
        for j in range(int(settings['ray'])):
            scale = 4.0 ** j
            point = ExtendedState(State.from_array(config.grid, base * scale))
            rows.append({
                'kind': 'ray', 'index': j, 'scale': scale,
                'distance': metric.distance_embedded(metric.embed(point), infinity),
                'distance_2K': fine.distance(point, ExtendedState.infinity()),
                'truncation_gap': math.nan, 'tail_bound': bound, 'triangle_slack': math.nan,
            })

        worst = min(r['triangle_slack'] for r in rows if r['kind'] == 'pair') if pairs else 0.0
        if worst < -1e-12:
            self.logger.warning(f"Triangle inequality violated by {-worst:.3g}")
        exporter.export_csv('metric_probe.csv', rows)
        return []

    # ------------------------------------------------------------------
    # ensembles
    # ------------------------------------------------------------------

    def _run_ensemble(self, config: RunConfig, exporter: ResultExporter) -> List[Dict[str, Any]]:
        """Push-forward estimate with its JSON summary, tables and moment snapshots"""
        engine = self._engine(config)
        estimate = engine.pushforward_estimate(config.distribution, config.times, config.N)
        grid = config.grid

        moment_files = []
        for i, moments in enumerate(estimate.moments):
            name = f'moments_t{i}.bin'
            exporter.export_snapshot(name, grid, moments)
            moment_files.append(name)

        blowup = pd.DataFrame({'time': estimate.times, 'blowup_fraction': estimate.blowup_fraction})
        observables = pd.DataFrame(observable_table(estimate))
        exporter.export_csv('blowup.csv', blowup)
        exporter.export_csv('observables.csv', observables)
        exporter.export_json('ensemble.json', {
            'schema_version': config.schema_version,
            'config': config.to_dict(),
            'seeds': {
                'base': config.distribution.seed,
                'members': list(range(config.N)),
                'stream': 'Philox(SeedSequence(base, spawn_key=(member,)))',
            },
            'estimate': estimate.to_dict(),
            'moment_files': moment_files,
            'moment_layout': 'rho, rho*u_1..rho*u_dim, rho*log(theta^c_v/rho)',
            'moment_l1_norms': estimate.moment_l1_norms(grid.cell_volume),
        })

        summary = {
            'Mode': config.mode,
            'Members': config.N,
            'Seed': config.distribution.seed,
            'Final time': estimate.times[-1],
            'Final blow-up fraction': estimate.blowup_fraction[-1],
            'Failed members': len(estimate.failures),
        }
        summary.update({f'Stopped ({k})': v for k, v in record_summary(estimate.records).items()})
        stopping = pd.DataFrame([{'member': i, **r.to_dict()} for i, r in enumerate(estimate.records)])
        stopping['location'] = stopping['location'].astype(str)
        exporter.export_summary_workbook('summary.xlsx', summary, {
            'Blowup': blowup, 'Observables': observables, 'Stopping': stopping,
        })
        return [{'member': i, **r.to_dict()} for i, r in enumerate(estimate.records)]

    def _run_slln(self, config: RunConfig, exporter: ResultExporter) -> List[Dict[str, Any]]:
        settings = config.slln
        engine = self._engine(config)
        study = engine.slln_convergence_study(
            config.distribution, float(settings['t']), settings['N_list'],
            replicates=int(settings['replicates']), N_ref=settings.get('N_ref'),
        )
        rows = study.rows()
        # log-log plot rows: replicate -1 carries the replicate means
        for n, error, width in zip(study.N_list, study.mean_errors, study.mean_half_widths):
            rows.append({'N': n, 'replicate': -1, 'l1_error': error, 'half_width': width})
        frame = pd.DataFrame(rows)
        frame['slope'] = study.slope
        exporter.export_csv('slln.csv', frame)
        return []

    def _run_markov(self, config: RunConfig, exporter: ResultExporter) -> List[Dict[str, Any]]:
        settings = config.markov
        engine = self._engine(config)
        dist = config.distribution
        dist_b = None
        if settings.get('sigma_b') is not None:
            dist_b = replace(dist, sigma=float(settings['sigma_b']), seed=replicate_seed(dist.seed, 1))
        atoms = self._parameter_atoms(config, settings.get('atoms', []))
        report = engine.markov_property_check(
            dist, float(settings['s']), float(settings['t']), config.N,
            lam=float(settings['lam']), dist_b=dist_b, atoms=atoms,
        )
        exporter.export_json('markov.json', report.to_dict())
        if not report.passed:
            self.logger.warning("Markov identities did not hold bit-for-bit")
        return []

    @staticmethod
    def _parameter_atoms(config: RunConfig, specs: List[Dict[str, Any]]
                         ) -> Optional[List[Tuple[Parameters, Optional[Forcing], float]]]:
        if not specs:
            return None
        forcing = config.build_forcing()
        return [
            (Parameters.from_dict({**config.params.to_dict(), **spec.get('params', {})}),
             forcing, float(spec.get('weight', 1.0 / len(specs))))
            for spec in specs
        ]


def run(config: RunConfig, default_workers: int = 1) -> RunManifest:
    return RunOrchestrator(default_workers).run(config)
