"""
Tests for run configuration validation, overrides and manifest replay
"""
import json
from pathlib import Path

import pytest

from src.main.python.config import (
    MODES,
    RunConfig,
    RunManifest,
    config_hash,
    ingest_config,
)
from src.main.python.core.exceptions import ConfigRejected
from src.main.python.models import Grid, Parameters

CONFIG_DIR = Path(__file__).resolve().parents[2] / 'main' / 'resources' / 'configs'


def write_json(path: Path, data) -> Path:
    path.write_text(json.dumps(data), encoding='utf-8')
    return path


class TestValidation:
    def test_minimal_config_gets_defaults(self):
        config = RunConfig.from_dict({})
        assert config.mode == 'solve'
        assert config.grid == Grid(1, 32)
        assert config.params == Parameters()
        assert config.N == 16
        assert config.times == [0.0, 0.1]
        assert config.output_dir is None
        assert config.stability['deltas'] == [1e-2, 1e-3, 1e-4]

    def test_heat_capacity_admissibility(self):
        with pytest.raises(ConfigRejected) as info:
            RunConfig.from_dict({'params': {'c_v': 0.9}})
        assert any('c_v > 1' in v for v in info.value.violations)

    def test_parameter_rules_agree(self):
        data = {'c_v': 1.0, 'mu': 0.0, 'eta': -0.1, 'kappa': 0.0}
        checked = Parameters.check(data)
        assert len(checked) == 4
        with pytest.raises(ValueError) as info:
            Parameters(**data)
        assert [f"params.{v}" for v in str(info.value).split('; ')] == checked
        assert Parameters.check(Parameters().to_dict()) == []

    def test_every_violation_reported(self):
        data = {
            'mode': 'wander',
            'params': {'c_v': 0.5, 'mu': -1.0},
            'N': 0,
            'times': [0.2, 0.1],
            'solver': {'cfl': 2.0},
        }
        with pytest.raises(ConfigRejected) as info:
            RunConfig.from_dict(data)
        violations = info.value.violations
        assert len(violations) >= 6
        assert any(v.startswith('mode') for v in violations)
        assert any(v.startswith('times') for v in violations)
        assert any('solver.cfl' in v for v in violations)

    def test_unknown_keys_warn_only(self):
        config = RunConfig.from_dict({'colour': 'blue', 'params': {'gamma': 1.4}})
        assert "Unknown key 'colour' ignored" in config.warnings
        assert "Unknown key 'params.gamma' ignored" in config.warnings

    def test_initial_state_must_be_positive(self):
        with pytest.raises(ConfigRejected) as info:
            RunConfig.from_dict({'initial': {'rho': {'constant': 0.05, 'modes': [{'wavevector': [1], 'cos': 0.1}]}}})
        assert any(v.startswith('initial') for v in info.value.violations)

    def test_mode_wavevector_dimension(self):
        with pytest.raises(ConfigRejected):
            RunConfig.from_dict({'grid': {'dim': 2, 'n': 16},
                                 'initial': {'rho': {'constant': 1.0, 'modes': [{'wavevector': [1], 'cos': 0.1}]}}})

    def test_bad_observable(self):
        with pytest.raises(ConfigRejected) as info:
            RunConfig.from_dict({'observables': [{'kind': 'cutoff_G_n', 'n': 0.5}, {'window': 1.0}]})
        assert any(v.startswith('observables[0]') for v in info.value.violations)
        assert any(v.startswith('observables[1]') for v in info.value.violations)

    def test_markov_atom_parameters(self):
        with pytest.raises(ConfigRejected) as info:
            RunConfig.from_dict({'markov': {'atoms': [{'params': {'kappa': -1.0}, 'weight': 1.0}]}})
        assert any('markov.atoms[0].params.kappa' in v for v in info.value.violations)

    @pytest.mark.parametrize('data, key', [
        ({'N': 'abc'}, 'N'),
        ({'seed': 'lucky'}, 'seed'),
        ({'workers': 'many'}, 'workers'),
        ({'times': ['x']}, 'times[0]'),
        ({'times': 0.1}, 'times'),
        ({'moment_cutoff': 'ten'}, 'moment_cutoff'),
        ({'stability': {'deltas': ['big']}}, 'stability.deltas[0]'),
        ({'slln': {'N_list': [16, 'lots']}}, 'slln.N_list[1]'),
        ({'markov': {'lam': 'half'}}, 'markov.lam'),
        ({'params': {'mu': 'thick'}}, 'params.mu'),
    ])
    def test_malformed_scalars_are_rejected(self, data, key):
        with pytest.raises(ConfigRejected) as info:
            RunConfig.from_dict({'mode': 'solve', **data})
        assert any(v.startswith(f"{key}:") for v in info.value.violations)

    def test_malformed_scalars_reported_together(self):
        with pytest.raises(ConfigRejected) as info:
            RunConfig.from_dict({'N': 'abc', 'times': ['x'], 'markov': {'lam': 'half'}, 'params': {'c_v': 0.5}})
        violations = info.value.violations
        for key in ('N:', 'times[0]:', 'markov.lam:', 'params.c_v:'):
            assert any(v.startswith(key) for v in violations)

    def test_numeric_strings_are_converted(self):
        config = RunConfig.from_dict({'N': '8', 'times': ['0', '0.05'], 'markov': {'lam': '0.25'}})
        assert config.N == 8
        assert config.times == [0.0, 0.05]
        assert config.markov['lam'] == 0.25

    @pytest.mark.parametrize('path', sorted(CONFIG_DIR.glob('*.json')), ids=lambda p: p.name)
    def test_sample_configs_are_valid(self, path):
        config = ingest_config(path)
        assert config.mode in MODES
        assert not config.warnings


class TestIngest:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigRejected):
            ingest_config(tmp_path / 'absent.json')

    def test_invalid_json(self, tmp_path):
        path = tmp_path / 'broken.json'
        path.write_text('{"mode": ', encoding='utf-8')
        with pytest.raises(ConfigRejected):
            ingest_config(path)

    def test_top_level_must_be_object(self, tmp_path):
        with pytest.raises(ConfigRejected):
            ingest_config(write_json(tmp_path / 'list.json', [1, 2]))

    def test_manifest_replays_config(self, tmp_path):
        original = RunConfig.from_dict({
            'mode': 'ensemble', 'grid': {'dim': 1, 'n': 16}, 'N': 3, 'seed': 17,
            'distribution': {'sigma': 0.02, 'm_max': 3},
            'observables': [{'kind': 'cutoff_G_n', 'n': 5.0, 'functional': 'energy'}],
            'forcing': {'Q': 0.1},
        })
        manifest = RunManifest(config_hash=config_hash(original), mode=original.mode, config=original.to_dict())
        replayed = ingest_config(manifest.write(tmp_path / 'manifest.json'))
        assert config_hash(replayed) == config_hash(original)
        assert replayed.distribution.seed == 17
        assert RunManifest.load(tmp_path / 'manifest.json').config_hash == manifest.config_hash


class TestOverrides:
    def test_seed_reaches_distribution(self):
        config = RunConfig.from_dict({'seed': 1}).with_overrides(seed=99)
        assert config.seed == 99
        assert config.distribution.seed == 99

    def test_unknown_mode_override(self):
        with pytest.raises(ConfigRejected):
            RunConfig.from_dict({}).with_overrides(mode='bogus')

    def test_hash_ignores_location_and_workers(self):
        config = RunConfig.from_dict({})
        moved = config.with_overrides(output_dir='/tmp/elsewhere', workers=8)
        assert config_hash(moved) == config_hash(config)
        assert config_hash(config.with_overrides(seed=5)) != config_hash(config)
