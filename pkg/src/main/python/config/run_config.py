"""
JSON run configuration: schema, validation and the run manifest
"""
import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from ..core.exceptions import ConfigRejected
from ..models import (
    DataDistribution,
    FieldSpec,
    Forcing,
    Grid,
    MetricConfig,
    Parameters,
    SolverConfig,
    State,
    StoppingConfig,
    VectorField,
    state_from_specs,
)
from ..services.metric import make_observable
from ..utils.logging_utils import setup_logger

SCHEMA_VERSION = "nsf-stat/1"
MODES = ('solve', 'stability', 'metric-probe', 'ensemble', 'slln-study', 'markov-check')

KNOWN_KEYS = {
    '': {'schema_version', 'mode', 'grid', 'params', 'forcing', 'initial', 'solver', 'stopping',
         'metric', 'distribution', 'times', 'N', 'seed', 'workers', 'output_dir', 'observables',
         'stability', 'metric_probe', 'slln', 'markov', 'moment_cutoff'},
    'grid': {'dim', 'n'},
    'params': {'c_v', 'mu', 'eta', 'kappa'},
    'forcing': {'g', 'Q'},
    'initial': {'rho', 'theta', 'u'},
    'solver': {'dt_init', 'cfl', 'dt_min', 'dealias', 'integrator', 'fixed_dt', 'record_stride'},
    'stopping': {'M', 'rho_floor', 'theta_floor', 'dt_min'},
    'metric': {'K', 'q'},
    'distribution': {'rho_bar', 'theta_bar', 'sigma', 'r', 'm_max', 'epsilon', 'seed'},
    'stability': {'deltas', 't'},
    'metric_probe': {'pairs', 'ray'},
    'slln': {'t', 'N_list', 'replicates', 'N_ref'},
    'markov': {'s', 't', 'lam', 'sigma_b', 'atoms'},
}


@dataclass(frozen=True)
class ForcingSpec:
    """Time-independent forcing as field specifications"""
    g: Tuple[FieldSpec, ...] = ()
    Q: FieldSpec = field(default_factory=FieldSpec)

    def build(self, grid: Grid) -> Forcing:
        g = self.g or tuple(FieldSpec() for _ in range(grid.dim))
        if len(g) != grid.dim:
            raise ValueError(f"forcing.g needs {grid.dim} components, got {len(g)}")
        return Forcing(g=VectorField(tuple(spec.build(grid) for spec in g)), Q=self.Q.build(grid))

    def to_dict(self) -> Dict[str, Any]:
        return {'g': [s.to_dict() for s in self.g], 'Q': self.Q.to_dict()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ForcingSpec':
        return cls(
            g=tuple(FieldSpec.from_dict(s) for s in data.get('g', [])),
            Q=FieldSpec.from_dict(data.get('Q', 0.0)),
        )


@dataclass(frozen=True)
class InitialSpec:
    """Initial state (rho, theta, u) as field specifications"""
    rho: FieldSpec = field(default_factory=lambda: FieldSpec(constant=1.0))
    theta: FieldSpec = field(default_factory=lambda: FieldSpec(constant=1.0))
    u: Tuple[FieldSpec, ...] = ()

    def build(self, grid: Grid) -> State:
        u = self.u or tuple(FieldSpec() for _ in range(grid.dim))
        return state_from_specs(grid, self.rho, self.theta, u)

    def to_dict(self) -> Dict[str, Any]:
        return {'rho': self.rho.to_dict(), 'theta': self.theta.to_dict(), 'u': [s.to_dict() for s in self.u]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'InitialSpec':
        return cls(
            rho=FieldSpec.from_dict(data.get('rho', 1.0)),
            theta=FieldSpec.from_dict(data.get('theta', 1.0)),
            u=tuple(FieldSpec.from_dict(s) for s in data.get('u', [])),
        )


@dataclass
class RunConfig:
    """
    Fully validated run configuration

    Study sections (stability, metric_probe, slln, markov) stay plain
    dictionaries with their defaults filled in.
    """
    mode: str = 'solve'
    grid: Grid = field(default_factory=lambda: Grid(1, 32))
    params: Parameters = field(default_factory=Parameters)
    forcing: ForcingSpec = field(default_factory=ForcingSpec)
    initial: InitialSpec = field(default_factory=InitialSpec)
    solver: SolverConfig = field(default_factory=SolverConfig)
    stopping: StoppingConfig = field(default_factory=StoppingConfig)
    metric: MetricConfig = field(default_factory=MetricConfig)
    distribution: DataDistribution = field(default_factory=DataDistribution)
    times: List[float] = field(default_factory=lambda: [0.0, 0.1])
    N: int = 16
    seed: int = 0
    workers: Optional[int] = None
    output_dir: Optional[str] = None
    observables: List[Dict[str, Any]] = field(default_factory=list)
    stability: Dict[str, Any] = field(default_factory=dict)
    metric_probe: Dict[str, Any] = field(default_factory=dict)
    slln: Dict[str, Any] = field(default_factory=dict)
    markov: Dict[str, Any] = field(default_factory=dict)
    moment_cutoff: Optional[float] = None
    schema_version: str = SCHEMA_VERSION
    warnings: List[str] = field(default_factory=list)

    @property
    def t_end(self) -> float:
        return max(self.times)

    def build_forcing(self) -> Forcing:
        return self.forcing.build(self.grid)

    def build_initial(self) -> State:
        return self.initial.build(self.grid)

    def with_overrides(self, mode: Optional[str] = None, seed: Optional[int] = None,
                       output_dir: Optional[str] = None, workers: Optional[int] = None) -> 'RunConfig':
        """Apply command-line overrides, re-validating the mode"""
        updated = replace(self)
        if mode is not None:
            if mode not in MODES:
                raise ConfigRejected([f"mode: must be one of {MODES}, got {mode!r}"])
            updated.mode = mode
        if seed is not None:
            updated.seed = int(seed)
            updated.distribution = replace(self.distribution, seed=int(seed))
        if output_dir is not None:
            updated.output_dir = output_dir
        if workers is not None:
            updated.workers = int(workers)
        return updated

    def to_dict(self) -> Dict[str, Any]:
        """Canonical content used for hashing; excludes output location and workers"""
        distribution = self.distribution.to_dict()
        distribution.pop('dim')
        distribution.pop('n')
        return {
            'schema_version': self.schema_version,
            'mode': self.mode,
            'grid': self.grid.to_dict(),
            'params': self.params.to_dict(),
            'forcing': self.forcing.to_dict(),
            'initial': self.initial.to_dict(),
            'solver': self.solver.to_dict(),
            'stopping': self.stopping.to_dict(),
            'metric': self.metric.to_dict(),
            'distribution': distribution,
            'times': list(self.times),
            'N': self.N,
            'seed': self.seed,
            'observables': list(self.observables),
            'stability': dict(self.stability),
            'metric_probe': dict(self.metric_probe),
            'slln': dict(self.slln),
            'markov': dict(self.markov),
            'moment_cutoff': self.moment_cutoff,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunConfig':
        """
        Validate a raw mapping and build the config

        Raises:
            ConfigRejected: With every violation found, not just the first
        """
        logger = setup_logger("RunConfig")
        violations: List[str] = []
        warnings = _unknown_keys(data)
        for warning in warnings:
            logger.warning(warning)

        schema = data.get('schema_version', SCHEMA_VERSION)
        if schema != SCHEMA_VERSION:
            violations.append(f"schema_version: expected {SCHEMA_VERSION!r}, got {schema!r}")
        mode = data.get('mode', 'solve')
        if mode not in MODES:
            violations.append(f"mode: must be one of {MODES}, got {mode!r}")

        grid = _build(violations, 'grid', lambda: Grid.from_dict({'dim': 1, 'n': 32, **data.get('grid', {})}))
        violations.extend(Parameters.check(data.get('params', {})))
        params = _build([], 'params', lambda: Parameters.from_dict(data.get('params', {})))
        solver = _build(violations, 'solver', lambda: SolverConfig.from_dict(data.get('solver', {})))
        stopping = _build(violations, 'stopping', lambda: StoppingConfig.from_dict(data.get('stopping', {})))
        metric = _build(violations, 'metric', lambda: MetricConfig.from_dict(data.get('metric', {})))
        seed = _number(violations, 'seed', data.get('seed', data.get('distribution', {}).get('seed', 0)), int)
        distribution = None
        if grid is not None and seed is not None:
            raw = {**data.get('distribution', {}), 'dim': grid.dim, 'n': grid.n, 'seed': seed}
            distribution = _build(violations, 'distribution', lambda: DataDistribution.from_dict(raw))

        forcing = _build(violations, 'forcing', lambda: ForcingSpec.from_dict(data.get('forcing', {})))
        initial = _build(violations, 'initial', lambda: InitialSpec.from_dict(data.get('initial', {})))
        if grid is not None and forcing is not None:
            _build(violations, 'forcing', lambda: forcing.build(grid))
        if grid is not None and initial is not None:
            state = _build(violations, 'initial', lambda: initial.build(grid))
            if state is not None and not state.in_x_plus() and mode in ('solve', 'stability'):
                violations.append("initial: rho and theta must be strictly positive (inf rho_0 > 0, inf theta_0 > 0)")

        times = _numbers(violations, 'times', data.get('times', [0.0, 0.1]))
        if times is not None and (not times or any(t < 0.0 for t in times) or times != sorted(times)):
            violations.append(f"times: must be a non-empty sorted list of non-negative times, got {times}")
        N = _number(violations, 'N', data.get('N', 16), int)
        if N is not None and N < 1:
            violations.append(f"N: must be >= 1, got {N}")
        workers = data.get('workers')
        if workers is not None:
            workers = _number(violations, 'workers', workers, int)
        if workers is not None and workers < 1:
            violations.append(f"workers: must be >= 1, got {workers}")

        observables = list(data.get('observables', []))
        for i, spec in enumerate(observables):
            if not isinstance(spec, dict) or 'kind' not in spec:
                violations.append(f"observables[{i}]: needs a 'kind' entry")
                continue
            _build(violations, f"observables[{i}]", lambda: make_observable(**spec))

        cutoff = data.get('moment_cutoff')
        if cutoff is not None:
            cutoff = _number(violations, 'moment_cutoff', cutoff)
        if cutoff is not None and cutoff < 1.0:
            violations.append(f"moment_cutoff: must be >= 1, got {cutoff}")
        stability = {'deltas': [1e-2, 1e-3, 1e-4], 't': times[-1] if times else 0.1, **data.get('stability', {})}
        stability['deltas'] = _numbers(violations, 'stability.deltas', stability['deltas'])
        stability['t'] = _number(violations, 'stability.t', stability['t'])
        if stability['deltas'] is not None and any(d < 0.0 for d in stability['deltas']):
            violations.append("stability.deltas: perturbation sizes must be non-negative")
        metric_probe = {'pairs': 100, 'ray': 8, **data.get('metric_probe', {})}
        slln = {'t': times[-1] if times else 0.1, 'N_list': [16, 64, 256, 1024], 'replicates': 8,
                'N_ref': None, **data.get('slln', {})}
        slln['N_list'] = _numbers(violations, 'slln.N_list', slln['N_list'], int)
        if slln['N_list'] is not None and slln['N_list'] != sorted(slln['N_list']):
            violations.append(f"slln.N_list: must be increasing, got {slln['N_list']}")
        markov = {'s': 0.05, 't': 0.05, 'lam': 0.5, 'sigma_b': None, 'atoms': [], **data.get('markov', {})}
        markov['lam'] = _number(violations, 'markov.lam', markov['lam'])
        if markov['lam'] is not None and not 0.0 <= markov['lam'] <= 1.0:
            violations.append(f"markov.lam: must lie in [0, 1], got {markov['lam']}")
        for i, atom in enumerate(markov['atoms']):
            violations.extend(
                v.replace('params.', f'markov.atoms[{i}].params.') for v in Parameters.check(atom.get('params', {}))
            )

        if violations:
            raise ConfigRejected(violations)
        return cls(
            mode=mode, grid=grid, params=params, forcing=forcing, initial=initial, solver=solver,
            stopping=stopping, metric=metric, distribution=distribution, times=times, N=N, seed=seed,
            workers=workers,
            output_dir=data.get('output_dir'),
            observables=observables,
            stability=stability, metric_probe=metric_probe, slln=slln, markov=markov,
            moment_cutoff=cutoff,
            schema_version=schema, warnings=warnings,
        )


def _build(violations: List[str], section: str, factory):
    try:
        return factory()
    except (ValueError, TypeError, KeyError) as e:
        violations.extend(f"{section}: {message}" for message in str(e).split('; '))
        return None


def _number(violations: List[str], key: str, value: Any, kind=float):
    """Convert one scalar, recording a violation instead of raising"""
    try:
        if isinstance(value, bool):
            raise TypeError(value)
        return kind(value)
    except (TypeError, ValueError, OverflowError):
        expected = 'an integer' if kind is int else 'a number'
        violations.append(f"{key}: expected {expected}, got {value!r}")
        return None


def _numbers(violations: List[str], key: str, values: Any, kind=float) -> Optional[List]:
    """Convert a list of scalars; None if it is not a list or any entry is bad"""
    if not isinstance(values, (list, tuple)):
        violations.append(f"{key}: expected a list, got {values!r}")
        return None
    found = len(violations)
    converted = [_number(violations, f"{key}[{i}]", v, kind) for i, v in enumerate(values)]
    return None if len(violations) > found else converted


def _unknown_keys(data: Dict[str, Any]) -> List[str]:
    warnings = [f"Unknown key '{k}' ignored" for k in data if k not in KNOWN_KEYS['']]
    for section, allowed in KNOWN_KEYS.items():
        if section and isinstance(data.get(section), dict):
            warnings.extend(
                f"Unknown key '{section}.{k}' ignored" for k in data[section] if k not in allowed
            )
    return warnings


def ingest_config(path: Union[str, Path]) -> RunConfig:
    """
    Read and validate a JSON run file

    Raises:
        ConfigRejected: If the file is missing, malformed or violates any constraint
    """
    path = Path(path)
    if not path.exists():
        raise ConfigRejected([f"config: file {path} does not exist"])
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        raise ConfigRejected([f"config: invalid JSON ({e})"])
    if not isinstance(data, dict):
        raise ConfigRejected(["config: top level must be an object"])
    if 'config_hash' in data and isinstance(data.get('config'), dict):
        # a run manifest replays the configuration it recorded
        data = data['config']
    return RunConfig.from_dict(data)


def config_hash(config: RunConfig) -> str:
    canonical = json.dumps(config.to_dict(), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


@dataclass
class RunManifest:
    """
    Record of one run: what was configured, what was written

    wall_time is the only non-reproducible entry and appears nowhere else.
    Presentation files (workbooks) embed save timestamps; their hashes are
    listed but only the remaining files are expected to replay bit-identically.
    """
    config_hash: str
    mode: str
    schema_version: str = SCHEMA_VERSION
    versions: Dict[str, str] = field(default_factory=dict)
    wall_time: float = 0.0
    stopping_records: List[Dict[str, Any]] = field(default_factory=list)
    files: Dict[str, str] = field(default_factory=dict)
    presentation_files: List[str] = field(default_factory=list)
    config: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'schema_version': self.schema_version,
            'config_hash': self.config_hash,
            'mode': self.mode,
            'versions': dict(self.versions),
            'wall_time': self.wall_time,
            'stopping_records': list(self.stopping_records),
            'files': dict(sorted(self.files.items())),
            'presentation_files': sorted(self.presentation_files),
            'config': self.config,
        }

    def write(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True), encoding='utf-8')
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'RunManifest':
        data = json.loads(Path(path).read_text(encoding='utf-8'))
        return cls(
            config_hash=data['config_hash'],
            mode=data['mode'],
            schema_version=data.get('schema_version', SCHEMA_VERSION),
            versions=data.get('versions', {}),
            wall_time=float(data.get('wall_time', 0.0)),
            stopping_records=data.get('stopping_records', []),
            files=data.get('files', {}),
            presentation_files=data.get('presentation_files', []),
            config=data.get('config', {}),
        )
