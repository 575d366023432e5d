"""
End-to-end tests for the run orchestrator and the command-line entry point
"""
import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

import run
from src.main.python.config import RunConfig, RunManifest, ingest_config
from src.main.python.core.exceptions import RunError
from src.main.python.services.orchestrator import MANIFEST_FILE, RunOrchestrator
from src.main.python.utils import read_snapshot, read_state

SMALL_ENSEMBLE = {
    'mode': 'ensemble',
    'grid': {'dim': 1, 'n': 16},
    'solver': {'dt_init': 1e-2, 'fixed_dt': True},
    'distribution': {'sigma': 0.02, 'm_max': 3},
    'times': [0.0, 0.05],
    'N': 4,
    'seed': 21,
}


def run_config(data, out: Path, workers: int = 1) -> RunManifest:
    config = RunConfig.from_dict({**data, 'output_dir': str(out)})
    return RunOrchestrator(workers).run(config)


def replayable(manifest: RunManifest) -> dict:
    return {k: v for k, v in manifest.files.items() if k not in manifest.presentation_files}


def write_json(path: Path, data) -> str:
    path.write_text(json.dumps(data), encoding='utf-8')
    return str(path)


class TestSolveMode:
    def test_constant_state_is_flat(self, tmp_path):
        data = {'grid': {'dim': 1, 'n': 16}, 'solver': {'dt_init': 1e-2, 'fixed_dt': True},
                'times': [0.0, 0.1, 0.2]}
        manifest = run_config(data, tmp_path)
        assert set(manifest.files) == {'diagnostics.csv', 'lower_bounds.csv', 'final_state.bin'}
        frame = pd.read_csv(tmp_path / 'diagnostics.csv')
        assert frame['mass'].max() - frame['mass'].min() <= 1e-12
        assert frame['time'].iloc[-1] == 0.2
        state = read_state(tmp_path / 'final_state.bin')
        expected = np.vstack([np.ones((2, 16)), np.zeros((1, 16))])
        np.testing.assert_allclose(state.to_array(), expected, atol=1e-12)
        assert manifest.stopping_records == [
            {'member': 0, 't_stop': None, 'reason': 'None', 'peak_value': 0.0, 'location': None}
        ]
        assert (tmp_path / MANIFEST_FILE).exists()

    def test_stiffness_surfaces_as_run_error(self, tmp_path):
        data = {
            'grid': {'dim': 1, 'n': 128},
            'initial': {'rho': {'constant': 1.0, 'modes': [{'wavevector': [1], 'cos': 0.1}]}},
            'solver': {'dt_init': 1e-3, 'dt_min': 5e-4},
            'times': [0.0, 0.1],
        }
        with pytest.raises(RunError) as info:
            run_config(data, tmp_path)
        assert 'mode=solve' in str(info.value)


class TestStudies:
    def test_stability_table(self, tmp_path):
        data = {
            'mode': 'stability', 'grid': {'dim': 1, 'n': 16},
            'initial': {'rho': {'constant': 1.0, 'modes': [{'wavevector': [1], 'cos': 0.1}]}},
            'solver': {'dt_init': 1e-2, 'fixed_dt': True},
            'stability': {'deltas': [1e-2, 1e-3], 't': 0.05},
        }
        run_config(data, tmp_path)
        frame = pd.read_csv(tmp_path / 'stability.csv')
        assert list(frame['delta']) == [1e-2, 1e-3]
        assert frame['fitted_order'].iloc[0] > 0.9

    def test_metric_probe(self, tmp_path):
        data = {'mode': 'metric-probe', 'grid': {'dim': 1, 'n': 16}, 'metric': {'K': 4},
                'distribution': {'sigma': 0.1, 'm_max': 3}, 'metric_probe': {'pairs': 6, 'ray': 5}}
        run_config(data, tmp_path)
        frame = pd.read_csv(tmp_path / 'metric_probe.csv')
        pairs, ray = frame[frame['kind'] == 'pair'], frame[frame['kind'] == 'ray']
        assert len(pairs) == 6 and len(ray) == 5
        assert (pairs['triangle_slack'] >= -1e-12).all()
        assert (pairs['truncation_gap'] <= pairs['tail_bound']).all()
        assert ray['distance'].is_monotonic_decreasing

    def test_markov_check(self, tmp_path):
        data = {**SMALL_ENSEMBLE, 'mode': 'markov-check', 'N': 2,
                'markov': {'s': 0.03, 't': 0.02, 'atoms': [{'params': {'kappa': 0.05}, 'weight': 0.25},
                                                           {'params': {'kappa': 0.1}, 'weight': 0.75}]}}
        run_config(data, tmp_path)
        report = json.loads((tmp_path / 'markov.json').read_text(encoding='utf-8'))
        assert report['passed'] is True
        assert report['details']['atom_weights'] == [0.25, 0.75]


class TestEnsembleMode:
    def test_zero_spread_members_agree(self, tmp_path):
        data = {**SMALL_ENSEMBLE, 'distribution': {'sigma': 0.0, 'm_max': 3}}
        manifest = run_config(data, tmp_path)
        assert len(manifest.stopping_records) == 4
        assert all(r == {**manifest.stopping_records[0], 'member': i}
                   for i, r in enumerate(manifest.stopping_records))
        grid, moments = read_snapshot(tmp_path / 'moments_t1.bin')
        assert grid.n == 16 and moments.shape == (3, 16)
        summary = json.loads((tmp_path / 'ensemble.json').read_text(encoding='utf-8'))
        assert summary['estimate']['blowup_fraction'] == [0.0, 0.0]
        assert summary['moment_files'] == ['moments_t0.bin', 'moments_t1.bin']
        assert pd.read_csv(tmp_path / 'blowup.csv')['blowup_fraction'].tolist() == [0.0, 0.0]

    def test_workbook_is_presentation_only(self, tmp_path):
        manifest = run_config(SMALL_ENSEMBLE, tmp_path)
        assert manifest.presentation_files == ['summary.xlsx']
        assert 'summary.xlsx' in manifest.files

    def test_manifest_replay_is_bit_identical(self, tmp_path):
        first = run_config(SMALL_ENSEMBLE, tmp_path / 'first')
        config = ingest_config(tmp_path / 'first' / MANIFEST_FILE).with_overrides(
            output_dir=str(tmp_path / 'second'))
        second = RunOrchestrator(1).run(config)
        assert second.config_hash == first.config_hash
        assert replayable(second) == replayable(first)

    @pytest.mark.slow
    def test_worker_count_does_not_change_results(self, tmp_path):
        single = run_config(SMALL_ENSEMBLE, tmp_path / 'one', workers=1)
        pooled = run_config({**SMALL_ENSEMBLE, 'workers': 4}, tmp_path / 'four')
        assert replayable(single) == replayable(pooled)


class TestCommandLine:
    def test_success(self, tmp_path):
        path = write_json(tmp_path / 'solve.json', {'grid': {'dim': 1, 'n': 16}, 'times': [0.0, 0.02]})
        assert run.main(['--config', path, '--out', str(tmp_path / 'out')]) == run.EXIT_OK
        assert (tmp_path / 'out' / MANIFEST_FILE).exists()

    def test_rejected_config(self, tmp_path):
        path = write_json(tmp_path / 'bad.json', {'params': {'c_v': 0.9}})
        assert run.main(['--config', path, '--out', str(tmp_path)]) == run.EXIT_CONFIG_REJECTED

    def test_malformed_value_is_rejected(self, tmp_path):
        path = write_json(tmp_path / 'typo.json', {'N': 'abc', 'times': ['x']})
        assert run.main(['--config', path, '--out', str(tmp_path)]) == run.EXIT_CONFIG_REJECTED

    def test_missing_config(self, tmp_path):
        assert run.main(['--config', str(tmp_path / 'none.json')]) == run.EXIT_CONFIG_REJECTED

    def test_numerical_failure(self, tmp_path):
        path = write_json(tmp_path / 'stiff.json', {
            'grid': {'dim': 1, 'n': 128},
            'initial': {'rho': {'constant': 1.0, 'modes': [{'wavevector': [1], 'cos': 0.1}]}},
            'solver': {'dt_init': 1e-3, 'dt_min': 5e-4},
            'times': [0.0, 0.1],
        })
        assert run.main(['--config', path, '--out', str(tmp_path / 'out')]) == run.EXIT_NUMERICAL_FAILURE

    def test_mode_override(self, tmp_path):
        path = write_json(tmp_path / 'solve.json', {'grid': {'dim': 1, 'n': 16}})
        assert run.main(['--config', path, '--mode', 'dance']) == run.EXIT_CONFIG_REJECTED
