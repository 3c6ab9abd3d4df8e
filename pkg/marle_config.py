"""
Run configuration: parsing, validation and rendering of `key = value` files.

A run file has four sections:

    [constants]   c, m, k_B, tau, sigma
    [grid]        n_p, p_max, n_i, s_max, gamma_min, nodes_per_panel, panel_ratio, quad_tol
    [scenario]    initial condition, gamma scan, time stepping, slab geometry
    [output]      path, precision

Lines starting with `#` (or trailing `# ...`) are comments. Every key is
optional; unknown or repeated keys are errors.
"""

import math
from dataclasses import dataclass, field, fields

from marle_core import Constants
from marle_utils import ConfigValidationError, ParseError
from phase_grid import GridConfig

PRESETS = ('single', 'mixture', 'bump')
INTEGRATORS = ('stepped', 'exact', 'rk4')

# Rendering of GridConfig fields left to the cutoff rules
AUTO = 'auto'

# ------------------------------------------------------------------
# Config blocks
# ------------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioConfig:
    # mcurves
    gamma_scan_min: float = 0.1
    gamma_scan_max: float = 100.0
    gamma_scan_points: int = 50
    # initial condition
    preset: str = 'single'
    density: float = 1.0
    velocity_x: float = 0.0
    velocity_y: float = 0.0
    velocity_z: float = 0.0
    gamma: float = 3.0
    gamma_a: float = 2.0
    gamma_b: float = 8.0
    weight_a: float = 0.5
    bump_amplitude: float = 0.5
    bump_center: float = 1.0
    bump_width: float = 0.5
    # equilibrate
    refine_levels: int = 1
    # relax / transport
    integrator: str = 'stepped'
    refreeze: bool = False
    dt: float = 0.1
    nsteps: int = 50
    output_every: int = 1
    length: float = 1.0
    ncells: int = 64
    profile_amplitude: float = 0.2
    # solver tolerances
    radial_tol: float = 1e-10
    gamma_tol: float = 1e-10

    def __post_init__(self):
        positive = ('gamma_scan_min', 'gamma_scan_max', 'density', 'gamma', 'gamma_a',
                    'gamma_b', 'bump_width', 'dt', 'length', 'radial_tol', 'gamma_tol')
        for name in positive:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigValidationError(f"{name} must be finite and positive, got {value}")
        if self.gamma_scan_max <= self.gamma_scan_min:
            raise ConfigValidationError("gamma_scan_max must exceed gamma_scan_min")
        for name in ('nsteps', 'output_every', 'ncells'):
            if getattr(self, name) < 1:
                raise ConfigValidationError(f"{name} must be at least 1, got {getattr(self, name)}")
        if self.gamma_scan_points < 2:
            raise ConfigValidationError("gamma_scan_points must be at least 2")
        if self.refine_levels < 0:
            raise ConfigValidationError(f"refine_levels must be nonnegative, got {self.refine_levels}")
        if self.preset not in PRESETS:
            raise ConfigValidationError(f"preset must be one of {PRESETS}, got {self.preset!r}")
        if self.integrator not in INTEGRATORS:
            raise ConfigValidationError(
                f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if not 0 <= self.weight_a <= 1:
            raise ConfigValidationError(f"weight_a must lie in [0, 1], got {self.weight_a}")
        if self.bump_amplitude < 0:
            raise ConfigValidationError(f"bump_amplitude must be nonnegative, got {self.bump_amplitude}")
        if not 0 <= self.profile_amplitude < 1:
            raise ConfigValidationError(
                f"profile_amplitude must lie in [0, 1) to keep the density positive, "
                f"got {self.profile_amplitude}")

    @property
    def velocity(self):
        return (self.velocity_x, self.velocity_y, self.velocity_z)


@dataclass(frozen=True)
class OutputConfig:
    path: str = ''
    precision: int = 17

    def __post_init__(self):
        if not 1 <= self.precision <= 17:
            raise ConfigValidationError(f"precision must lie in [1, 17], got {self.precision}")
        # a # would start a comment and a line break would end the value
        if any(ch in self.path for ch in '#\n\r') or self.path != self.path.strip():
            raise ConfigValidationError(
                f"path cannot contain '#', line breaks or surrounding spaces, got {self.path!r}")


@dataclass(frozen=True)
class RunConfig:
    constants: Constants = field(default_factory=Constants)
    grid: GridConfig = field(default_factory=GridConfig)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    output: OutputConfig = field(default_factory=OutputConfig)


SECTIONS = {
    'constants': Constants,
    'grid': GridConfig,
    'scenario': ScenarioConfig,
    'output': OutputConfig,
}

# Field types where the default value does not tell
OPTIONAL_FLOATS = {('grid', 'p_max'), ('grid', 's_max')}
INT_FIELDS = {('grid', 'n_p'), ('grid', 'n_i'), ('grid', 'nodes_per_panel')}

# ------------------------------------------------------------------
# Value conversion
# ------------------------------------------------------------------

def _field_kind(section, f):
    if (section, f.name) in OPTIONAL_FLOATS:
        return 'optional_float'
    if (section, f.name) in INT_FIELDS:
        return 'int'
    default = f.default
    if isinstance(default, bool):
        return 'bool'
    if isinstance(default, int):
        return 'int'
    if isinstance(default, float):
        return 'float'
    return 'str'


def _convert(kind, raw):
    if kind == 'optional_float':
        return None if raw.lower() == AUTO else float(raw)
    if kind == 'float':
        return float(raw)
    if kind == 'int':
        return int(raw)
    if kind == 'bool':
        lowered = raw.lower()
        if lowered in ('true', 'yes', 'on', '1'):
            return True
        if lowered in ('false', 'no', 'off', '0'):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    return raw


def _render(value):
    if value is None:
        return AUTO
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    return str(value)

# ------------------------------------------------------------------
# Parse / render
# ------------------------------------------------------------------

def parse_config(text):
    """
    Parse and validate a run configuration.

    Args:
        text: contents of a run file

    Returns:
        RunConfig
    """
    kinds = {name: {f.name: _field_kind(name, f) for f in fields(cls)}
             for name, cls in SECTIONS.items()}
    values = {name: {} for name in SECTIONS}
    section = None

    for line_number, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if line.startswith('['):
            if not line.endswith(']'):
                raise ParseError(f"malformed section header {line!r}", line_number)
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ParseError(f"unknown section [{section}]", line_number)
            continue
        if '=' not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", line_number)
        if section is None:
            raise ParseError("key outside of any [section]", line_number)
        key, raw = (part.strip() for part in line.split('=', 1))
        if key not in kinds[section]:
            raise ParseError(f"unknown key {key!r} in [{section}]", line_number)
        if key in values[section]:
            raise ParseError(f"duplicate key {key!r} in [{section}]", line_number)
        try:
            values[section][key] = _convert(kinds[section][key], raw)
        except ValueError as e:
            raise ParseError(f"bad value for {key!r}: {e}", line_number)

    return RunConfig(**{name: cls(**values[name]) for name, cls in SECTIONS.items()})


def render_config(cfg):
    """Write every key of cfg; parse_config(render_config(cfg)) == cfg."""
    lines = []
    for name in SECTIONS:
        block = getattr(cfg, name)
        lines.append(f"[{name}]")
        lines.extend(f"{f.name} = {_render(getattr(block, f.name))}" for f in fields(block))
        lines.append('')
    return '\n'.join(lines)


def load_config(path):
    with open(path, encoding='utf-8') as handle:
        try:
            text = handle.read()
        except UnicodeDecodeError as e:
            raise ParseError(f"run file is not valid UTF-8 (byte {e.start}: {e.reason})")
    return parse_config(text)
