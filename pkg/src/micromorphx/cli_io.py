"""Scenario configuration files, snapshots, and manifests.

Configs are INI files. Values are Python/JSON literals (numbers, lists,
quoted or bare strings). Load terms live in sections named ``loads.<name>``.
"""
from __future__ import annotations

import ast
import configparser
import json
import os
import platform
import re
import sys
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, build_grid
from .tensor_core import (
    FourthOrderTensor,
    IsotropicModuli,
    MaterialModel,
    ModelVariant,
    SymmetryClass,
    validate_parameters,
)

# key -> (type, required, default)
SCHEMA = {
    "grid": {"n": ("shape", True, None), "lengths": ("vec3", False, (1.0, 1.0, 1.0))},
    "material": {
        "variant": ("str", False, "FULL"),
        "mu_e": ("float", True, None),
        "lambda_e": ("float", True, None),
        "mu_c": ("float", False, 0.0),
        "mu_h": ("float", True, None),
        "lambda_h": ("float", True, None),
        "alpha_1": ("float", True, None),
        "alpha_2": ("float", True, None),
        "alpha_3": ("float", False, None),
        "C_file": ("str", False, None),
        "H_file": ("str", False, None),
        "L_file": ("str", False, None),
    },
    "time": {
        "dt": ("float", True, None),
        "T": ("float", True, None),
        "scheme": ("str", False, "midpoint"),
        "on_unstable": ("str", False, "error"),
        "dependence": ("bool", False, False),
    },
    "ic": {
        "preset": ("str", False, "zero"),
        "field": ("str", False, "u"),
        "component": ("int", False, 0),
        "modes": ("vec3", False, (1, 1, 1)),
        "amplitude": ("float", False, 1.0),
        "seed": ("int", False, None),
    },
    "loads.*": {
        "target": ("str", True, None),
        "component": ("int", False, 0),
        "space": ("str", False, "sine"),
        "modes": ("vec3", False, (1, 1, 1)),
        "powers": ("vec3", False, (0, 0, 0)),
        "amplitude": ("float", False, 1.0),
        "time_kind": ("str", False, "const"),
        "time_poly": ("list", False, (1.0,)),
        "omega": ("float", False, 1.0),
        "phase": ("float", False, 0.0),
    },
    "output": {
        "directory": ("str", False, "out"),
        "ledger_every": ("int", False, 1),
        "snapshot_every": ("int", False, 0),
        "formats": ("list", False, ("csv", "vtk", "json")),
    },
    "dispersion": {"path": ("list", False, ((0, 0, 0), (5, 0, 0))), "samples": ("int", False, 100)},
    "constants": {"spec": ("str", False, "korn"), "levels": ("list", False, (4, 8, 16))},
}
REQUIRED_SECTIONS = ("grid", "material", "time")
CHOICES = {
    ("time", "scheme"): ("midpoint", "leapfrog"),
    ("time", "on_unstable"): ("error", "warn", "ignore"),
    ("ic", "preset"): ("zero", "random", "sine"),
    ("ic", "field"): ("u", "v", "P", "Pdot"),
    ("loads.*", "target"): ("f", "M"),
    ("loads.*", "space"): ("sine", "poly", "const"),
    ("loads.*", "time_kind"): ("const", "sin", "cos"),
}


class ConfigError(ValueError):
    """All problems found in a config, each as ``(line, key path, message)``."""

    def __init__(self, errors):
        self.errors = list(errors)
        lines = [f"line {ln}: {path}: {msg}" if ln else f"{path}: {msg}" for ln, path, msg in self.errors]
        super().__init__("invalid config:\n  " + "\n  ".join(lines))


def _literal(raw):
    try:
        return ast.literal_eval(raw)
    except (ValueError, SyntaxError):
        return raw.strip().strip("'\"")


def _coerce(kind, value):
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TypeError("expected a number")
        return float(value)
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeError("expected an integer")
        return value
    if kind == "bool":
        if isinstance(value, str) and value.lower() in ("true", "false", "yes", "no"):
            return value.lower() in ("true", "yes")
        if not isinstance(value, bool):
            raise TypeError("expected true or false")
        return value
    if kind == "str":
        if not isinstance(value, str):
            raise TypeError("expected a string")
        return value
    if kind == "list":
        if isinstance(value, str):
            value = [_literal(v) for v in value.split(",") if v.strip()]
        if not isinstance(value, (list, tuple)):
            raise TypeError("expected a list")
        return tuple(tuple(v) if isinstance(v, list) else v for v in value)
    if kind == "vec3":
        if not isinstance(value, (list, tuple)) or len(value) != 3:
            raise TypeError("expected a list of three numbers")
        return tuple(value)
    if kind == "shape":
        if isinstance(value, int) and not isinstance(value, bool):
            return (value,) * 3
        if isinstance(value, (list, tuple)) and len(value) == 3 and all(isinstance(v, int) for v in value):
            return tuple(value)
        raise TypeError("expected an integer or three integers")
    raise AssertionError(kind)


def _line_numbers(text):
    """Map ``(section, key)`` and ``(section, None)`` to 1-based line numbers."""
    where = {}
    section = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        m = re.match(r"\[(.+)\]$", s)
        if m:
            section = m.group(1).strip()
            where.setdefault((section, None), i)
            continue
        m = re.match(r"([^=:]+)[=:]", s)
        if m and section is not None:
            where.setdefault((section, m.group(1).strip()), i)
    return where


@dataclass
class ScenarioConfig:
    grid: dict
    material: dict
    time: dict
    ic: dict
    loads: dict
    output: dict
    dispersion: dict
    constants: dict
    text: str = ""
    base_dir: str = "."
    present: set = field(default_factory=set)

    def as_dict(self):
        return {
            "grid": self.grid, "material": self.material, "time": self.time, "ic": self.ic,
            "loads": self.loads, "output": self.output, "dispersion": self.dispersion,
            "constants": self.constants,
        }

    @property
    def variant(self) -> ModelVariant:
        return ModelVariant.parse(self.material["variant"])

    def moduli(self) -> IsotropicModuli:
        m = self.material
        alpha_3 = m["alpha_3"] if m["alpha_3"] is not None else 1.0
        return IsotropicModuli(m["mu_e"], m["lambda_e"], m["mu_c"], m["mu_h"], m["lambda_h"],
                               m["alpha_1"], m["alpha_2"], alpha_3)

    def build_grid(self) -> Grid:
        return build_grid(self.grid["n"], self.grid["lengths"])

    def build_material(self) -> MaterialModel:
        mat = MaterialModel.isotropic(self.moduli(), self.variant)
        files = {k: self.material[f"{k}_file"] for k in ("C", "H", "L")}
        if any(files.values()):
            tensors = {}
            for k, path in files.items():
                if path:
                    arr = np.loadtxt(os.path.join(self.base_dir, path)).reshape(9, 9)
                    tensors[k] = FourthOrderTensor(arr, SymmetryClass.FULL_MAJOR)
            mat = MaterialModel(tensors.get("C", mat.C), tensors.get("H", mat.H), tensors.get("L", mat.L_c),
                                self.variant, None)
            mat.validate()
        return mat

    def build_loads(self, grid: Grid):
        from .dynamics import LoadTerm, SeparableLoads, TimeProfile, ZeroLoads

        if not self.loads:
            return ZeroLoads(grid)
        terms = []
        for name in sorted(self.loads):
            spec = self.loads[name]
            shape = spatial_field(grid, spec["space"], spec["modes"], spec["powers"]) * spec["amplitude"]
            n = grid.n_nodes
            if spec["target"] == "f":
                f = np.zeros((n, 3))
                f[:, spec["component"]] = shape
                term = LoadTerm(f, None)
            else:
                M = np.zeros((n, 9))
                M[:, spec["component"]] = shape
                term = LoadTerm(None, M.reshape(n, 3, 3))
            term.profile = TimeProfile(tuple(spec["time_poly"]), spec["time_kind"], spec["omega"], spec["phase"])
            terms.append(term)
        return SeparableLoads(grid, terms)

    def build_initial(self, sm, seed=0):
        from .dynamics import State

        ic = self.ic
        grid = sm.grid
        if ic["preset"] == "zero":
            return State.zeros(grid)
        if ic["preset"] == "random":
            rng = np.random.default_rng(ic["seed"] if ic["seed"] is not None else seed)
            return State.random(sm, rng).scaled(ic["amplitude"])
        state = State.zeros(grid)
        arr = getattr(state, ic["field"])
        flat = arr.reshape(grid.n_nodes, -1)
        flat[:, ic["component"]] = ic["amplitude"] * spatial_field(grid, "sine", ic["modes"], (0, 0, 0))
        q, p = state.vectors(sm)
        return State.from_vectors(sm, q, p)


def spatial_field(grid: Grid, kind, modes=(1, 1, 1), powers=(0, 0, 0)):
    """Nodal values of ``prod sin(m_a pi x_a / L_a)``, ``prod x_a^p_a`` or 1."""
    x = grid.nodes
    if kind == "sine":
        out = np.ones(grid.n_nodes)
        for a in range(3):
            out *= np.sin(modes[a] * np.pi * x[:, a] / grid.lengths[a])
        return out
    if kind == "poly":
        return np.prod([x[:, a] ** powers[a] for a in range(3)], axis=0)
    return np.ones(grid.n_nodes)


def parse_config(text, base_dir=".") -> ScenarioConfig:
    """Parse and validate a scenario config; raise :class:`ConfigError` listing every problem."""
    lines = _line_numbers(text)
    errors = []
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([(getattr(exc, "lineno", None), "config", str(exc).splitlines()[0])]) from None

    values = {k: {} for k in SCHEMA if k != "loads.*"}
    loads = {}
    present = set()
    for section in cp.sections():
        schema_key = "loads.*" if section.startswith("loads.") else section
        if schema_key not in SCHEMA:
            errors.append((lines.get((section, None)), section, "unknown section"))
            continue
        present.add(section)
        schema = SCHEMA[schema_key]
        target = loads.setdefault(section.split(".", 1)[1], {}) if schema_key == "loads.*" else values[section]
        for key, raw in cp.items(section):
            path = f"{section}.{key}"
            if key not in schema:
                errors.append((lines.get((section, key)), path, "unknown key"))
                continue
            kind = schema[key][0]
            try:
                target[key] = _coerce(kind, _literal(raw))
            except TypeError as exc:
                errors.append((lines.get((section, key)), path, f"type mismatch: {exc}"))
                target[key] = None
                continue
            choices = CHOICES.get((schema_key, key))
            if choices and target[key] not in choices:
                errors.append((lines.get((section, key)), path, f"must be one of {', '.join(choices)}"))
        for key, (kind, required, default) in schema.items():
            if key not in target:
                if required:
                    errors.append((lines.get((section, None)), f"{section}.{key}", "missing key"))
                else:
                    target[key] = default
    for section in REQUIRED_SECTIONS:
        if section not in present:
            errors.append((None, section, "missing section"))
    for section, schema in SCHEMA.items():
        if section != "loads.*" and section not in present:
            for key, (kind, required, default) in schema.items():
                values[section].setdefault(key, default)

    t = values["time"]
    if t.get("dt") is not None and t["dt"] <= 0:
        errors.append((lines.get(("time", "dt")), "time.dt", "must be > 0"))
    if t.get("T") is not None and t["T"] <= 0:
        errors.append((lines.get(("time", "T")), "time.T", "must be > 0"))
    g = values["grid"]
    if g.get("n") is not None and min(g["n"]) < 2:
        errors.append((lines.get(("grid", "n")), "grid.n", "cell counts must be >= 2"))
    if g.get("lengths") is not None and min(g["lengths"]) <= 0:
        errors.append((lines.get(("grid", "lengths")), "grid.lengths", "lengths must be > 0"))
    m = values["material"]
    try:
        variant = ModelVariant.parse(m.get("variant", "FULL"))
    except ValueError as exc:
        errors.append((lines.get(("material", "variant")), "material.variant", str(exc)))
        variant = None
    if variant is ModelVariant.FULL and m.get("alpha_3") is None and "material" in present:
        errors.append((lines.get(("material", None)), "material.alpha_3", "missing key (required for FULL)"))
    moduli_keys = ("mu_e", "lambda_e", "mu_c", "mu_h", "lambda_h", "alpha_1", "alpha_2", "alpha_3")
    if all(m.get(k) is not None for k in moduli_keys if k != "alpha_3"):
        moduli = IsotropicModuli(*(m[k] if m.get(k) is not None else 1.0 for k in moduli_keys))
        report = validate_parameters(moduli)
        for check in report.checks:
            if not check.passed:
                key = _condition_key(check.name)
                errors.append((lines.get(("material", key)), f"material.{key}", f"condpara: {check.name}"))
    n_steps_ok = t.get("dt") and t.get("T") and t["dt"] > 0 and t["T"] > 0
    if n_steps_ok:
        n = round(t["T"] / t["dt"])
        if n < 1 or abs(n * t["dt"] - t["T"]) > 1e-9 * t["T"]:
            errors.append((lines.get(("time", "T")), "time.T", "must be an integer multiple of time.dt"))
    if errors:
        raise ConfigError(errors)
    return ScenarioConfig(values["grid"], m, t, values["ic"], loads, values["output"], values["dispersion"],
                          values["constants"], text, base_dir, present)


def _condition_key(name):
    """Config key a parameter condition refers to (the last modulus it mentions)."""
    found = re.findall(r"(mu_e|lambda_e|mu_c|mu_h|lambda_h|alpha_1|alpha_2|alpha_3)", name)
    return found[-1] if found else name


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        text = fh.read()
    return parse_config(text, os.path.dirname(os.path.abspath(path)))


# ---------------------------------------------------------------------------
# Legacy VTK snapshots

VTK_TENSOR_NAMES = tuple(f"P{i}{j}" for i in range(1, 4) for j in range(1, 4))


def _to_vtk_order(grid: Grid, values):
    """Node-major (z fastest) values to VTK point order (x fastest)."""
    shape = grid.node_shape
    arr = np.asarray(values).reshape(*shape, -1)
    return arr.transpose(2, 1, 0, 3).reshape(grid.n_nodes, -1)


def _from_vtk_order(grid: Grid, values):
    nx, ny, nz = grid.node_shape
    arr = np.asarray(values).reshape(nz, ny, nx, -1)
    return arr.transpose(2, 1, 0, 3).reshape(grid.n_nodes, -1)


def write_snapshot(state, grid: Grid, path, energy_density=None):
    """Write ``u``, ``P11..P33`` and the energy density as ASCII legacy VTK.

    Header (one item per line): ``# vtk DataFile Version 3.0``, a title line
    ``micromorphx snapshot t=<t>``, ``ASCII``, ``DATASET STRUCTURED_POINTS``,
    ``DIMENSIONS``, ``ORIGIN 0 0 0``, ``SPACING``, ``POINT_DATA <n>``. Values
    use 17 significant digits and points are ordered with x fastest.
    """
    fmt = "%.17g"
    u = _to_vtk_order(grid, state.u)
    P = _to_vtk_order(grid, state.P.reshape(grid.n_nodes, 9))
    e = np.zeros(grid.n_nodes) if energy_density is None else np.asarray(energy_density, float)
    e = _to_vtk_order(grid, e)[:, 0]
    out = [
        "# vtk DataFile Version 3.0",
        f"micromorphx snapshot t={state.t:.17g}",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        "DIMENSIONS {} {} {}".format(*grid.node_shape),
        "ORIGIN 0 0 0",
        "SPACING {} {} {}".format(*(f"{h:.17g}" for h in grid.h)),
        f"POINT_DATA {grid.n_nodes}",
        "VECTORS u double",
    ]
    out.extend(" ".join(fmt % x for x in row) for row in u)
    for c, name in enumerate(VTK_TENSOR_NAMES):
        out += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        out.extend(fmt % x for x in P[:, c])
    out += ["SCALARS energy_density double 1", "LOOKUP_TABLE default"]
    out.extend(fmt % x for x in e)
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


@dataclass
class Snapshot:
    t: float
    dimensions: tuple
    spacing: tuple
    u: np.ndarray
    P: np.ndarray
    energy_density: np.ndarray


def read_snapshot(path, grid: Grid | None = None) -> Snapshot:
    """Read a file written by :func:`write_snapshot` back into node order."""
    with open(path) as fh:
        lines = fh.read().split("\n")
    t = float(lines[1].split("t=", 1)[1])
    dims = tuple(int(v) for v in lines[4].split()[1:])
    spacing = tuple(float(v) for v in lines[6].split()[1:])
    npts = int(lines[7].split()[1])
    if grid is None:
        grid = build_grid(tuple(d - 1 for d in dims), tuple(s * (d - 1) for s, d in zip(spacing, dims)))
    i = 9
    u = np.array([[float(x) for x in lines[i + r].split()] for r in range(npts)])
    i += npts
    arrays = {}
    while i < len(lines) and lines[i].startswith("SCALARS"):
        name = lines[i].split()[1]
        arrays[name] = np.array([float(x) for x in lines[i + 2:i + 2 + npts]])
        i += 2 + npts
    P = np.stack([arrays[n] for n in VTK_TENSOR_NAMES], axis=1)
    return Snapshot(
        t, dims, spacing,
        _from_vtk_order(grid, u),
        _from_vtk_order(grid, P).reshape(npts, 3, 3),
        _from_vtk_order(grid, arrays["energy_density"])[:, 0],
    )


# ---------------------------------------------------------------------------
# Manifests


def versions():
    import scipy

    from . import __version__

    out = {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
           "micromorphx": __version__}
    try:
        import pyamg

        out["pyamg"] = pyamg.__version__
    except ImportError:  # pragma: no cover
        pass
    return out


def write_manifest(path, command, argv, config_text=None, config=None, seed=None, threads=None,
                   outputs=(), status="ok", exit_code=0, extra=None):
    manifest = {
        "command": command,
        "argv": list(argv),
        "config_text": config_text,
        "config": config,
        "seed": seed,
        "threads": threads,
        "versions": versions(),
        "platform": sys.platform,
        "outputs": sorted(outputs),
        "status": status,
        "exit_code": exit_code,
    }
    if extra:
        manifest.update(extra)
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return manifest


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, (set, tuple)):
        return list(obj)
    return str(obj)


def write_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
