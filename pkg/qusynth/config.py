"""qusynth configuration using ato scope."""
import json
import math
from collections.abc import Mapping
from pathlib import Path

import numpy as np
from ato.adict import ADict
from ato.scope import Scope
from loguru import logger

from qusynth.errors import ConfigError

scope = Scope()

COMMANDS = ('decompose', 'scan', 'detuning', 'stark', 'tomography', 'averaging', 'selftest')


def defaults() -> ADict:
    config = ADict()
    config.command = 'selftest'
    config.seed = 42
    config.config_path = None

    # Output artifacts
    config.output = ADict(
        dir='./results',
        format='csv',  # 'csv' or 'json' for tables
        svg=True,
    )

    # Target gate: a registry name or 9 complex entries
    config.gate = ADict(
        name='fourier',
        entries=None,
        scheme='dual',  # 'single' (A,B,A) or 'dual' (AB,B,A)
    )

    # Drive strengths and integrator
    config.drive = ADict(
        rabi_hz=2000.0,  # |Omega| / 2pi for A and B, and the dual-tone total
        method='rk4',  # 'rk4' or 'exact'
        steps_per_pulse=1000,
        check_tol=1e-6,
    )

    # Dual-tone population scan
    config.scan = ADict(
        alpha=0.5,  # in units of pi
        beta=0.0,  # in units of pi
        input=0,
        points=201,
        span=2.0,  # in units of t_AB
    )

    # Uniform detuning sweep, delta = Delta_A = -Delta_B in units of |Omega|
    config.detuning = ADict(
        start=-0.05,
        stop=0.05,
        points=21,
        threshold=0.99,
    )

    # Optical trap Stark shift model
    config.trap = ADict(
        r_tf=6.5e-6,
        tensor_center_hz=25.8e3,
        tensor_edge_hz=25.3e3,
        scalar_center_hz=6.0e3,
        scalar_edge_hz=5.9e3,
        omega_ho=2*math.pi*100.0,
        samples=1000,
        sampling='quadrature',  # 'quadrature' or 'random'
        include_scalar=False,
        spread_scale=1.0,
    )

    # Trapped-ensemble rows: both transitions follow the |1> shift, and each pulse
    # is phase-referenced to the atom at its own onset
    config.stark = ADict(
        rabi_hz=2200.0,
        transitions='common',  # 'common' or 'opposed'
        clock='pulse',  # 'pulse' or 'sequence'
        method='exact',
        tomography=False,
        atoms=None,
    )

    config.tomography = ADict(
        sequence='fourier_dual',  # 'fourier_single', 'fourier_dual' or 'gate'
        input=0,
        noise='exact',  # 'exact' or 'multinomial'
        atoms=100000,
        max_iter=5000,
        tol=1e-10,
        data_path=None,
    )

    config.averaging = ADict(
        sequence='fourier_dual',
        input=0,
        scans=15,
        trials=10,
        atoms=100000,
    )

    config.selftest = ADict(
        haar_cases=1000,
        coupling_cases=100,
        mle_cases=100,
        dynamics_cases=100,
        sweep_points=11,
        stark_samples=1000,
    )
    return config


@scope.observe(default=True)
def default(config: ADict):
    for key, value in defaults().items():
        config[key] = value


@scope.observe
def decompose(config: ADict):
    config.command = 'decompose'


@scope.observe
def scan(config: ADict):
    config.command = 'scan'


@scope.observe
def detuning(config: ADict):
    config.command = 'detuning'


@scope.observe
def stark(config: ADict):
    config.command = 'stark'


@scope.observe
def tomography(config: ADict):
    config.command = 'tomography'


@scope.observe
def averaging(config: ADict):
    config.command = 'averaging'


@scope.observe
def selftest(config: ADict):
    config.command = 'selftest'


@scope.observe
def single_tone(config: ADict):
    """Scheme I: A, B, A single-tone pulses."""
    config.gate.scheme = 'single'
    config.tomography.sequence = 'fourier_single'
    config.averaging.sequence = 'fourier_single'


@scope.observe
def noisy(config: ADict):
    """Multinomial shot noise on every simulated read-out."""
    config.tomography.noise = 'multinomial'
    config.stark.atoms = 100000


@scope.observe
def quick(config: ADict):
    """Reduced sample counts for smoke runs."""
    config.trap.samples = 200
    config.averaging.trials = 4
    config.selftest = ADict(
        haar_cases=100,
        coupling_cases=20,
        mle_cases=10,
        dynamics_cases=10,
        sweep_points=5,
        stark_samples=200,
    )


@scope.observe
def randomized(config: ADict):
    """Seeded random radial sampling instead of midpoint quadrature."""
    config.trap.sampling = 'random'


@scope.observe
def with_scalar(config: ADict):
    config.trap.include_scalar = True


@scope.observe
def scan_019(config: ADict):
    config.command = 'scan'
    config.scan.alpha = 0.19


@scope.observe
def scan_031(config: ADict):
    config.command = 'scan'
    config.scan.alpha = 0.31


@scope.observe
def rk4(config: ADict):
    """Reference integrator for every propagation."""
    config.drive.method = 'rk4'
    config.stark.method = 'rk4'


def to_plain(value):
    """Recursively convert ADict sections into plain JSON-ready containers."""
    if isinstance(value, Mapping):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_plain(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    return value


_UNSET = object()


def _merge(target, source: Mapping, base, prefix: str = ''):
    for key, value in source.items():
        if isinstance(value, Mapping) and isinstance(target.get(key), Mapping):
            _merge(target[key], value, base.get(key, {}) if isinstance(base, Mapping) else {},
                   prefix=f'{prefix}{key}.')
            continue
        if key not in target:
            logger.warning(f'Config file introduces unknown key {prefix}{key}')
        elif target[key] != base.get(key, _UNSET):
            # set by a preset or on the command line
            logger.debug(f'Keeping {prefix}{key}={target[key]!r} over config file value {value!r}')
            continue
        target[key] = ADict(**value) if isinstance(value, Mapping) else value


def merge_json(config: ADict, path) -> ADict:
    """Deep-merge a JSON document into config.

    Only fields still at their default values take the file's value, so presets and
    command-line overrides win over the file.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f'Config file not found: {path}')
    with open(path, 'r', encoding='utf-8') as f:
        document = json.load(f)
    if not isinstance(document, Mapping):
        raise ConfigError(f'Config file must hold a JSON object: {path}')
    _merge(config, document, defaults())
    logger.debug(f'Merged config file {path}')
    return config


def validate(config: ADict):
    if config.command not in COMMANDS:
        raise ConfigError(f'Unknown command {config.command!r}; expected one of {COMMANDS}')
    if config.gate.scheme not in ('single', 'dual'):
        raise ConfigError(f'Unknown scheme {config.gate.scheme!r}')
    if config.drive.rabi_hz <= 0:
        raise ConfigError('drive.rabi_hz must be positive')
    if config.drive.method not in ('rk4', 'exact'):
        raise ConfigError(f'Unknown propagation method {config.drive.method!r}')
    if config.trap.r_tf <= 0 or config.trap.samples < 1:
        raise ConfigError('trap.r_tf must be positive and trap.samples at least 1')
    if config.trap.tensor_center_hz < config.trap.tensor_edge_hz:
        raise ConfigError('trap tensor shift at the centre must not be below the edge value')
    if config.trap.sampling not in ('quadrature', 'random'):
        raise ConfigError(f'Unknown trap sampling {config.trap.sampling!r}')
    if config.stark.rabi_hz <= 0:
        raise ConfigError('stark.rabi_hz must be positive')
    if config.stark.transitions not in ('common', 'opposed'):
        raise ConfigError(f'Unknown transition convention {config.stark.transitions!r}')
    if config.stark.clock not in ('pulse', 'sequence'):
        raise ConfigError(f'Unknown clock {config.stark.clock!r}')
    for section in ('scan', 'tomography', 'averaging'):
        if config[section].input not in (0, 1, 2):
            raise ConfigError(f'{section}.input must be 0, 1 or 2, got {config[section].input!r}')
    if config.output.format not in ('csv', 'json'):
        raise ConfigError(f'Unknown output format {config.output.format!r}')
    if config.tomography.noise not in ('exact', 'multinomial'):
        raise ConfigError(f'Unknown noise mode {config.tomography.noise!r}')
    for section in ('tomography', 'averaging'):
        if config[section].atoms is not None and config[section].atoms <= 0:
            raise ConfigError(f'{section}.atoms must be positive')

    stochastic = (
        config.tomography.noise == 'multinomial'
        or config.trap.sampling == 'random'
        or config.stark.atoms is not None
        or config.command in ('averaging', 'selftest')
    )
    if stochastic and config.seed is None:
        raise ConfigError('A seed is required whenever a stochastic mode is enabled')
