"""Problem configuration: YAML schema, units, validation, and assembly.

A configuration is a key-value tree with explicit unit suffixes on physical
quantities (``bulk_modulus: 9.0 GPa``; bare numbers mean SI base units).
Unknown keys are rejected (not ignored) and every diagnostic names the
offending key path. A validated :class:`ProblemSpec` can be serialized back
to an equivalent config, and assembled into particles + operator + boundary
conditions ready for the quasistatic solver.

A config may instead be ``benchmark: {name: ..., resolution: ..., overrides:
{...}}``, which expands to the full built-in problem definition before
validation, so benchmark runs and user runs share one pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Any

import numpy as np
import yaml

from .discretization import ParticleSet, build_lattice, build_neighbors
from .errors import ConfigurationError
from .fields import (AxialRampPressure, ConstantBodyForce, ConstantPressure,
                     HydrostaticPressure, RadialRampPressure, SpecificWeight,
                     TimeScaledPressure)
from .material import EffectiveStress, Material
from .solver import BoundaryConditions, build_bond_system, solve_quasistatic

# ---------------------------------------------------------------------------
# units
# ---------------------------------------------------------------------------

UNITS = {
    "pressure": {"Pa": 1.0, "kPa": 1e3, "MPa": 1e6, "GPa": 1e9,
                 "psi": 6894.757293168361, "ksi": 6894757.293168361},
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "in": 0.0254, "ft": 0.3048},
    "force": {"N": 1.0, "kN": 1e3, "MN": 1e6, "lbf": 4.4482216152605},
    "specific_weight": {"N/m3": 1.0, "kN/m3": 1e3, "MN/m3": 1e6,
                        "lbf/ft3": 4.4482216152605 / 0.3048 ** 3},
    "time": {"s": 1.0, "min": 60.0, "h": 3600.0, "day": 86400.0},
}


def parse_quantity(value, dimension: str, path: str) -> float:
    """A config quantity: a bare number (SI base unit) or ``"<number> <unit>"``
    with a unit suffix belonging to ``dimension``."""
    if isinstance(value, bool):
        raise ConfigurationError(f"config key '{path}' must be a number, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        parts = value.split()
        if len(parts) == 2:
            try:
                number = float(parts[0])
            except ValueError:
                raise ConfigurationError(
                    f"config key '{path}': cannot parse number from {value!r}") from None
            table = UNITS[dimension]
            if parts[1] not in table:
                known = ", ".join(sorted(table))
                raise ConfigurationError(
                    f"config key '{path}': unit {parts[1]!r} is not a {dimension} unit "
                    f"(expected one of: {known})")
            return number * table[parts[1]]
        try:
            return float(value)
        except ValueError:
            raise ConfigurationError(
                f"config key '{path}': expected a number or '<number> <unit>', "
                f"got {value!r}") from None
    raise ConfigurationError(
        f"config key '{path}': expected a number or unit string, got {type(value).__name__}")


def _quantity_list(value, dimension: str, path: str, length: int | None = None) -> list[float]:
    if not isinstance(value, (list, tuple)):
        raise ConfigurationError(f"config key '{path}' must be a list")
    if length is not None and len(value) != length:
        raise ConfigurationError(
            f"config key '{path}' must have {length} entries, got {len(value)}")
    return [parse_quantity(v, dimension, f"{path}[{i}]") for i, v in enumerate(value)]


def _plain(value, path: str, kind=float):
    try:
        if kind is float and not isinstance(value, bool):
            return float(value)
        if kind is int and isinstance(value, int) and not isinstance(value, bool):
            return value
        if kind is bool and isinstance(value, bool):
            return value
        if kind is str and isinstance(value, str):
            return value
    except (TypeError, ValueError):
        pass
    raise ConfigurationError(
        f"config key '{path}' must be of type {kind.__name__}, got {value!r}")


def _section(tree: dict, path: str, known: set[str], required: set[str] = frozenset()):
    if not isinstance(tree, dict):
        raise ConfigurationError(f"config key '{path}' must be a mapping")
    for key in tree:
        if key not in known:
            raise ConfigurationError(
                f"unknown config key '{path}.{key}'" if path else f"unknown config key '{key}'")
    for key in required:
        if key not in tree:
            raise ConfigurationError(
                f"missing required config key '{path + '.' if path else ''}{key}'")


# ---------------------------------------------------------------------------
# declarative pieces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TagSpec:
    """Named particle selection: a boundary ``layer`` (axis/side/layer count),
    an axis-aligned ``box``, or a ``cylinder_shell`` (radial interval about an
    axis line)."""

    kind: str
    params: dict

    def mask(self, particles: ParticleSet, spacing: np.ndarray) -> np.ndarray:
        x = particles.positions
        p = self.params
        if self.kind == "layer":
            ax = p["axis"]
            # Cut midway between lattice layers: a whole-multiple-of-spacing
            # depth would land the threshold exactly on a layer of cell
            # centers, where one ulp of rounding decides membership.
            depth = (p["layers"] - 0.5) * spacing[ax]
            lo, hi = x[:, ax].min(), x[:, ax].max()
            if p["side"] == "min":
                return x[:, ax] <= lo + depth
            return x[:, ax] >= hi - depth
        if self.kind == "box":
            lo = np.asarray(p["min"])
            hi = np.asarray(p["max"])
            return np.all((x >= lo) & (x <= hi), axis=1)
        if self.kind == "cylinder_shell":
            d = x - np.asarray(p["center"])
            d[:, p["axis"]] = 0.0
            r = np.sqrt((d * d).sum(axis=1))
            return (r >= p["r_min"]) & (r <= p["r_max"])
        raise ConfigurationError(f"unknown tag kind {self.kind!r}")


@dataclass(frozen=True)
class FixSpec:
    tag: str
    axis: int | None
    value: float = 0.0


@dataclass(frozen=True)
class LoadSpec:
    """Point-force program on a tag: ``each`` (per particle), ``total`` (split
    evenly over the tag), or ``radial`` (total magnitude split evenly, each
    particle pushed along its own outward cylindrical radius)."""

    tag: str
    mode: str                      # each | total | radial
    vector: tuple[float, float, float] | None = None
    magnitude: float | None = None
    center: tuple[float, float, float] | None = None
    axis: int | None = None


@dataclass
class ProblemSpec:
    """Validated problem definition (SI units throughout)."""

    name: str
    bounds: list[list[float]]
    spacing: list[float]
    exclude_cylinder: dict | None
    horizon_ratio: float | None
    horizon_absolute: float | None
    material: Material
    effective_stress: EffectiveStress
    pressure_field: object | None
    body_force: object | None
    mirror_axes: tuple[int, ...] = ()
    tags: dict[str, TagSpec] = dc_field(default_factory=dict)
    fixes: list[FixSpec] = dc_field(default_factory=list)
    loads: list[LoadSpec] = dc_field(default_factory=list)
    times: list[float] | None = None
    load_scale: list[list[float]] | None = None
    tolerance: float = 1e-8
    max_iterations: int | None = None
    linearization: str = "reference_direction"
    output_formats: list[str] = dc_field(default_factory=lambda: ["csv"])
    output_frames: str = "final"

    @property
    def horizon(self) -> float:
        if self.horizon_absolute is not None:
            return self.horizon_absolute
        return self.horizon_ratio * min(self.spacing)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_AXES = (0, 1, 2)


def _parse_axis(value, path: str) -> int:
    if value not in _AXES:
        raise ConfigurationError(f"config key '{path}' must be an axis (0, 1 or 2), got {value!r}")
    return int(value)


def _parse_pressure_field(tree: dict, path: str):
    _section(tree, path, {"type", "value", "axis", "datum", "unit_weight",
                          "clamp_negative", "x0", "p0", "x1", "p1", "center",
                          "r_in", "p_in", "r_out", "p_out", "axial_interval",
                          "time_scale"}, {"type"})
    kind = _plain(tree["type"], f"{path}.type", str)
    if kind == "constant":
        _section(tree, path, {"type", "value", "time_scale"}, {"value"})
        base = ConstantPressure(parse_quantity(tree["value"], "pressure", f"{path}.value"))
    elif kind == "hydrostatic":
        _section(tree, path, {"type", "axis", "datum", "unit_weight",
                              "clamp_negative", "time_scale"},
                 {"axis", "datum", "unit_weight"})
        base = HydrostaticPressure(
            axis=_parse_axis(tree["axis"], f"{path}.axis"),
            datum=parse_quantity(tree["datum"], "length", f"{path}.datum"),
            unit_weight=parse_quantity(tree["unit_weight"], "specific_weight",
                                       f"{path}.unit_weight"),
            clamp_negative=_plain(tree.get("clamp_negative", True),
                                  f"{path}.clamp_negative", bool))
    elif kind == "axial_ramp":
        _section(tree, path, {"type", "axis", "x0", "p0", "x1", "p1", "time_scale"},
                 {"axis", "x0", "p0", "x1", "p1"})
        base = AxialRampPressure(
            axis=_parse_axis(tree["axis"], f"{path}.axis"),
            x0=parse_quantity(tree["x0"], "length", f"{path}.x0"),
            p0=parse_quantity(tree["p0"], "pressure", f"{path}.p0"),
            x1=parse_quantity(tree["x1"], "length", f"{path}.x1"),
            p1=parse_quantity(tree["p1"], "pressure", f"{path}.p1"))
    elif kind == "radial_ramp":
        _section(tree, path, {"type", "center", "axis", "r_in", "p_in", "r_out",
                              "p_out", "axial_interval", "time_scale"},
                 {"center", "axis", "r_in", "p_in", "r_out", "p_out"})
        interval = tree.get("axial_interval")
        base = RadialRampPressure(
            center=tuple(_quantity_list(tree["center"], "length", f"{path}.center", 3)),
            axis=_parse_axis(tree["axis"], f"{path}.axis"),
            r_in=parse_quantity(tree["r_in"], "length", f"{path}.r_in"),
            p_in=parse_quantity(tree["p_in"], "pressure", f"{path}.p_in"),
            r_out=parse_quantity(tree["r_out"], "length", f"{path}.r_out"),
            p_out=parse_quantity(tree["p_out"], "pressure", f"{path}.p_out"),
            axial_interval=None if interval is None else
            tuple(_quantity_list(interval, "length", f"{path}.axial_interval", 2)))
    else:
        raise ConfigurationError(
            f"config key '{path}.type': unknown pressure field type {kind!r} (expected "
            f"constant, hydrostatic, axial_ramp or radial_ramp)")
    scale = tree.get("time_scale")
    if scale is not None:
        table = _parse_scale_table(scale, f"{path}.time_scale")
        return TimeScaledPressure(base=base, scale=np.asarray(table))
    return base


def _parse_scale_table(value, path: str) -> list[list[float]]:
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigurationError(f"config key '{path}' must be a nonempty list of [t, factor] rows")
    table = []
    last_t = None
    for i, row in enumerate(value):
        if not isinstance(row, (list, tuple)) or len(row) != 2:
            raise ConfigurationError(f"config key '{path}[{i}]' must be a [time, factor] pair")
        t = parse_quantity(row[0], "time", f"{path}[{i}][0]")
        f = _plain(row[1], f"{path}[{i}][1]")
        if last_t is not None and t <= last_t:
            raise ConfigurationError(f"config key '{path}': times must be strictly increasing")
        last_t = t
        table.append([t, f])
    return table


def _parse_body_force(tree: dict, path: str):
    _section(tree, path, {"type", "axis", "weight", "vector"}, {"type"})
    kind = _plain(tree["type"], f"{path}.type", str)
    if kind == "specific_weight":
        _section(tree, path, {"type", "axis", "weight"}, {"axis", "weight"})
        return SpecificWeight(axis=_parse_axis(tree["axis"], f"{path}.axis"),
                              weight=parse_quantity(tree["weight"], "specific_weight",
                                                    f"{path}.weight"))
    if kind == "constant":
        _section(tree, path, {"type", "vector"}, {"vector"})
        return ConstantBodyForce(vector=tuple(
            _quantity_list(tree["vector"], "specific_weight", f"{path}.vector", 3)))
    raise ConfigurationError(
        f"config key '{path}.type': unknown body force type {kind!r} "
        f"(expected specific_weight or constant)")


def _parse_tag(tree: dict, path: str) -> TagSpec:
    _section(tree, path, {"type", "axis", "side", "layers", "min", "max",
                          "center", "r_min", "r_max"}, {"type"})
    kind = _plain(tree["type"], f"{path}.type", str)
    if kind == "layer":
        _section(tree, path, {"type", "axis", "side", "layers"}, {"axis", "side"})
        side = _plain(tree["side"], f"{path}.side", str)
        if side not in ("min", "max"):
            raise ConfigurationError(f"config key '{path}.side' must be 'min' or 'max'")
        layers = tree.get("layers", 1)
        if not isinstance(layers, int) or isinstance(layers, bool) or layers < 1:
            raise ConfigurationError(f"config key '{path}.layers' must be a positive integer")
        return TagSpec("layer", {"axis": _parse_axis(tree["axis"], f"{path}.axis"),
                                 "side": side, "layers": layers})
    if kind == "box":
        _section(tree, path, {"type", "min", "max"}, {"min", "max"})
        return TagSpec("box", {"min": _quantity_list(tree["min"], "length", f"{path}.min", 3),
                               "max": _quantity_list(tree["max"], "length", f"{path}.max", 3)})
    if kind == "cylinder_shell":
        _section(tree, path, {"type", "axis", "center", "r_min", "r_max"},
                 {"axis", "center", "r_min", "r_max"})
        r_min = parse_quantity(tree["r_min"], "length", f"{path}.r_min")
        r_max = parse_quantity(tree["r_max"], "length", f"{path}.r_max")
        if not 0.0 <= r_min <= r_max:
            raise ConfigurationError(
                f"config key '{path}': need 0 <= r_min <= r_max, got {r_min}, {r_max}")
        return TagSpec("cylinder_shell", {
            "axis": _parse_axis(tree["axis"], f"{path}.axis"),
            "center": _quantity_list(tree["center"], "length", f"{path}.center", 3),
            "r_min": r_min, "r_max": r_max})
    raise ConfigurationError(
        f"config key '{path}.type': unknown tag type {kind!r} "
        f"(expected layer, box or cylinder_shell)")


def parse_config(text: str) -> ProblemSpec:
    """Parse and fully validate a YAML problem configuration (or a
    ``benchmark:`` shorthand, which expands to the built-in problem)."""
    try:
        tree = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"config is not well-formed YAML: {exc}") from None
    if tree is None:
        raise ConfigurationError("config is empty")
    if not isinstance(tree, dict):
        raise ConfigurationError("config root must be a mapping")
    if "benchmark" in tree:
        _section(tree, "", {"benchmark"})
        from .benchmarks import benchmark_config
        sub = tree["benchmark"]
        _section(sub, "benchmark", {"name", "resolution", "overrides"}, {"name"})
        name = _plain(sub["name"], "benchmark.name", str)
        resolution = sub.get("resolution", 1)
        if not isinstance(resolution, int) or isinstance(resolution, bool) or resolution < 1:
            raise ConfigurationError("config key 'benchmark.resolution' must be a positive integer")
        expanded = benchmark_config(name, resolution)
        overrides = sub.get("overrides") or {}
        if not isinstance(overrides, dict):
            raise ConfigurationError("config key 'benchmark.overrides' must be a mapping")
        _deep_update(expanded, overrides)
        tree = expanded
    return parse_config_tree(tree)


def _deep_update(base: dict, extra: dict) -> None:
    for key, val in extra.items():
        if isinstance(val, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], val)
        else:
            base[key] = val


def parse_config_tree(tree: dict) -> ProblemSpec:
    _section(tree, "", {"name", "lattice", "horizon", "material", "effective_stress",
                        "pressure_field", "body_force", "bcs", "schedule", "solver",
                        "output"},
             {"lattice", "horizon", "material"})
    name = _plain(tree.get("name", "problem"), "name", str)

    lat = tree["lattice"]
    _section(lat, "lattice", {"bounds", "spacing", "exclude_cylinder", "mirror_axes"},
             {"bounds", "spacing"})
    if not isinstance(lat["bounds"], (list, tuple)) or len(lat["bounds"]) != 3:
        raise ConfigurationError("config key 'lattice.bounds' must be 3 [lo, hi] pairs")
    bounds = [_quantity_list(b, "length", f"lattice.bounds[{i}]", 2)
              for i, b in enumerate(lat["bounds"])]
    spacing_val = lat["spacing"]
    if isinstance(spacing_val, (list, tuple)):
        spacing = _quantity_list(spacing_val, "length", "lattice.spacing", 3)
    else:
        spacing = [parse_quantity(spacing_val, "length", "lattice.spacing")] * 3
    excl = lat.get("exclude_cylinder")
    if excl is not None:
        _section(excl, "lattice.exclude_cylinder", {"axis", "center", "radius"},
                 {"axis", "center", "radius"})
        excl = {"axis": _parse_axis(excl["axis"], "lattice.exclude_cylinder.axis"),
                "center": _quantity_list(excl["center"], "length",
                                         "lattice.exclude_cylinder.center", 3),
                "radius": parse_quantity(excl["radius"], "length",
                                         "lattice.exclude_cylinder.radius")}
        if excl["radius"] < 0:
            raise ConfigurationError(
                "config key 'lattice.exclude_cylinder.radius' must be nonnegative")
    mirror_raw = lat.get("mirror_axes", [])
    if not isinstance(mirror_raw, (list, tuple)):
        raise ConfigurationError("config key 'lattice.mirror_axes' must be a list of axes")
    mirror_axes = tuple(_parse_axis(ax, "lattice.mirror_axes") for ax in mirror_raw)
    if len(set(mirror_axes)) != len(mirror_axes):
        raise ConfigurationError("config key 'lattice.mirror_axes' lists an axis twice")

    hor = tree["horizon"]
    _section(hor, "horizon", {"ratio", "absolute"})
    ratio = hor.get("ratio")
    absolute = hor.get("absolute")
    if (ratio is None) == (absolute is None):
        raise ConfigurationError(
            "config key 'horizon' must set exactly one of 'ratio' or 'absolute'")
    if ratio is not None:
        ratio = _plain(ratio, "horizon.ratio")
        if ratio <= 0:
            raise ConfigurationError("config key 'horizon.ratio' must be positive")
    if absolute is not None:
        absolute = parse_quantity(absolute, "length", "horizon.absolute")
        if absolute <= 0:
            raise ConfigurationError("config key 'horizon.absolute' must be positive")

    mat = tree["material"]
    _section(mat, "material", {"bulk_modulus", "shear_modulus"},
             {"bulk_modulus", "shear_modulus"})
    material = Material(
        bulk_modulus=parse_quantity(mat["bulk_modulus"], "pressure", "material.bulk_modulus"),
        shear_modulus=parse_quantity(mat["shear_modulus"], "pressure", "material.shear_modulus"))

    es_tree = tree.get("effective_stress")
    if es_tree is None:
        effective = EffectiveStress.unit()
    else:
        _section(es_tree, "effective_stress",
                 {"mode", "gamma", "bulk_modulus", "grain_bulk_modulus"}, {"mode"})
        mode = _plain(es_tree["mode"], "effective_stress.mode", str)
        if mode == "unit":
            _section(es_tree, "effective_stress", {"mode"})
            effective = EffectiveStress.unit()
        elif mode == "explicit":
            _section(es_tree, "effective_stress", {"mode", "gamma"}, {"gamma"})
            effective = EffectiveStress.explicit(
                _plain(es_tree["gamma"], "effective_stress.gamma"))
        elif mode == "biot":
            _section(es_tree, "effective_stress",
                     {"mode", "bulk_modulus", "grain_bulk_modulus"}, {"grain_bulk_modulus"})
            bulk = es_tree.get("bulk_modulus")
            bulk = material.bulk_modulus if bulk is None else \
                parse_quantity(bulk, "pressure", "effective_stress.bulk_modulus")
            grain = parse_quantity(es_tree["grain_bulk_modulus"], "pressure",
                                   "effective_stress.grain_bulk_modulus")
            try:
                effective = EffectiveStress.biot(bulk, grain)
            except ConfigurationError as exc:
                raise ConfigurationError(f"config key 'effective_stress': {exc}") from None
        else:
            raise ConfigurationError(
                f"config key 'effective_stress.mode': unknown mode {mode!r} "
                f"(expected unit, biot or explicit)")

    pressure = None
    if tree.get("pressure_field") is not None:
        pressure = _parse_pressure_field(tree["pressure_field"], "pressure_field")
    body = None
    if tree.get("body_force") is not None:
        body = _parse_body_force(tree["body_force"], "body_force")

    tags: dict[str, TagSpec] = {}
    fixes: list[FixSpec] = []
    loads: list[LoadSpec] = []
    bcs = tree.get("bcs")
    if bcs is not None:
        _section(bcs, "bcs", {"tags", "fixed", "loads"})
        for tag_name, tag_tree in (bcs.get("tags") or {}).items():
            tags[str(tag_name)] = _parse_tag(tag_tree, f"bcs.tags.{tag_name}")
        for i, fx in enumerate(bcs.get("fixed") or []):
            path = f"bcs.fixed[{i}]"
            _section(fx, path, {"tag", "axis", "value"}, {"tag"})
            axis = fx.get("axis")
            fixes.append(FixSpec(
                tag=_plain(fx["tag"], f"{path}.tag", str),
                axis=None if axis is None else _parse_axis(axis, f"{path}.axis"),
                value=parse_quantity(fx.get("value", 0.0), "length", f"{path}.value")))
        for i, ld in enumerate(bcs.get("loads") or []):
            path = f"bcs.loads[{i}]"
            _section(ld, path, {"tag", "each", "total", "radial_total", "center", "axis"},
                     {"tag"})
            tag = _plain(ld["tag"], f"{path}.tag", str)
            modes = [m for m in ("each", "total", "radial_total") if ld.get(m) is not None]
            if len(modes) != 1:
                raise ConfigurationError(
                    f"config key '{path}' must set exactly one of 'each', 'total' "
                    f"or 'radial_total'")
            mode = modes[0]
            if mode in ("each", "total"):
                vec = tuple(_quantity_list(ld[mode], "force", f"{path}.{mode}", 3))
                loads.append(LoadSpec(tag=tag, mode=mode, vector=vec))
            else:
                _section(ld, path, {"tag", "radial_total", "center", "axis"},
                         {"radial_total", "center", "axis"})
                loads.append(LoadSpec(
                    tag=tag, mode="radial",
                    magnitude=parse_quantity(ld["radial_total"], "force",
                                             f"{path}.radial_total"),
                    center=tuple(_quantity_list(ld["center"], "length", f"{path}.center", 3)),
                    axis=_parse_axis(ld["axis"], f"{path}.axis")))

    times = None
    load_scale = None
    sched = tree.get("schedule")
    if sched is not None:
        _section(sched, "schedule", {"times", "steps", "stop", "load_scale"})
        if sched.get("times") is not None:
            if sched.get("steps") is not None or sched.get("stop") is not None:
                raise ConfigurationError(
                    "config key 'schedule' must set either 'times' or 'steps'+'stop', not both")
            times = [parse_quantity(t, "time", f"schedule.times[{i}]")
                     for i, t in enumerate(sched["times"])]
        elif sched.get("steps") is not None or sched.get("stop") is not None:
            steps = sched.get("steps")
            if not isinstance(steps, int) or isinstance(steps, bool) or steps < 1:
                raise ConfigurationError("config key 'schedule.steps' must be a positive integer")
            stop = parse_quantity(sched.get("stop", 1.0), "time", "schedule.stop")
            times = [(k + 1) * stop / steps for k in range(steps)]
        if times is not None and any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
            raise ConfigurationError("config key 'schedule.times' must be strictly increasing")
        if sched.get("load_scale") is not None:
            load_scale = _parse_scale_table(sched["load_scale"], "schedule.load_scale")

    tolerance = 1e-8
    max_iterations = None
    linearization = "reference_direction"
    solv = tree.get("solver")
    if solv is not None:
        _section(solv, "solver", {"tolerance", "max_iterations", "linearization"})
        if solv.get("tolerance") is not None:
            tolerance = _plain(solv["tolerance"], "solver.tolerance")
            if not 0.0 < tolerance < 1.0:
                raise ConfigurationError("config key 'solver.tolerance' must lie in (0, 1)")
        if solv.get("max_iterations") is not None:
            max_iterations = solv["max_iterations"]
            if not isinstance(max_iterations, int) or isinstance(max_iterations, bool) \
                    or max_iterations < 1:
                raise ConfigurationError(
                    "config key 'solver.max_iterations' must be a positive integer")
        if solv.get("linearization") is not None:
            linearization = _plain(solv["linearization"], "solver.linearization", str)
            if linearization not in ("reference_direction", "fixed_point_M"):
                raise ConfigurationError(
                    "config key 'solver.linearization' must be 'reference_direction' "
                    "or 'fixed_point_M'")

    output_formats = ["csv"]
    output_frames = "final"
    out = tree.get("output")
    if out is not None:
        _section(out, "output", {"formats", "frames"})
        if out.get("formats") is not None:
            fmts = out["formats"]
            if not isinstance(fmts, list) or not fmts:
                raise ConfigurationError("config key 'output.formats' must be a nonempty list")
            for f in fmts:
                if f not in ("csv", "vtk"):
                    raise ConfigurationError(
                        f"config key 'output.formats': unknown format {f!r} "
                        f"(expected csv or vtk)")
            output_formats = list(fmts)
        if out.get("frames") is not None:
            output_frames = _plain(out["frames"], "output.frames", str)
            if output_frames not in ("final", "all"):
                raise ConfigurationError("config key 'output.frames' must be 'final' or 'all'")

    spec = ProblemSpec(
        name=name, bounds=bounds, spacing=spacing, exclude_cylinder=excl,
        horizon_ratio=ratio, horizon_absolute=absolute, material=material,
        effective_stress=effective, pressure_field=pressure, body_force=body,
        mirror_axes=mirror_axes,
        tags=tags, fixes=fixes, loads=loads, times=times, load_scale=load_scale,
        tolerance=tolerance, max_iterations=max_iterations, linearization=linearization,
        output_formats=output_formats, output_frames=output_frames)
    _cross_validate(spec)
    return spec


def _cross_validate(spec: ProblemSpec) -> None:
    for fx in spec.fixes:
        if fx.tag not in spec.tags:
            raise ConfigurationError(
                f"config key 'bcs.fixed': tag {fx.tag!r} is not defined under bcs.tags")
    for ld in spec.loads:
        if ld.tag not in spec.tags:
            raise ConfigurationError(
                f"config key 'bcs.loads': tag {ld.tag!r} is not defined under bcs.tags")
    fixed_pairs = set()
    for fx in spec.fixes:
        axes = _AXES if fx.axis is None else (fx.axis,)
        fixed_pairs.update((fx.tag, ax) for ax in axes)
    for ld in spec.loads:
        if ld.mode == "radial":
            loaded_axes = [ax for ax in _AXES if ax != ld.axis]
        else:
            loaded_axes = [ax for ax in _AXES if ld.vector[ax] != 0.0]
        for ax in loaded_axes:
            if (ld.tag, ax) in fixed_pairs:
                raise ConfigurationError(
                    f"config key 'bcs': tag {ld.tag!r} is both fixed and loaded on "
                    f"axis {ax}")
    if any(b[1] <= b[0] for b in spec.bounds):
        raise ConfigurationError("config key 'lattice.bounds': extents must be positive")
    if any(s <= 0 for s in spec.spacing):
        raise ConfigurationError("config key 'lattice.spacing' must be positive")
    if spec.mirror_axes and spec.linearization != "reference_direction":
        raise ConfigurationError(
            "config key 'lattice.mirror_axes': mirror-image neighborhoods read "
            "displacements unreflected, which only the reference-direction "
            "linearization evaluates consistently")


# ---------------------------------------------------------------------------
# serialization (round-trip)
# ---------------------------------------------------------------------------

def problem_to_tree(spec: ProblemSpec) -> dict:
    """Emit a config tree (SI numbers, no unit suffixes) that reparses to an
    equivalent ProblemSpec."""
    tree: dict[str, Any] = {
        "name": spec.name,
        "lattice": {"bounds": [list(b) for b in spec.bounds],
                    "spacing": list(spec.spacing)},
        "horizon": ({"ratio": spec.horizon_ratio} if spec.horizon_ratio is not None
                    else {"absolute": spec.horizon_absolute}),
        "material": {"bulk_modulus": spec.material.bulk_modulus,
                     "shear_modulus": spec.material.shear_modulus},
        "effective_stress": {"mode": "explicit", "gamma": spec.effective_stress.gamma},
    }
    if spec.exclude_cylinder is not None:
        tree["lattice"]["exclude_cylinder"] = {k: (list(v) if isinstance(v, (list, tuple))
                                                  else v)
                                               for k, v in spec.exclude_cylinder.items()}
    if spec.mirror_axes:
        tree["lattice"]["mirror_axes"] = list(spec.mirror_axes)
    if spec.pressure_field is not None:
        tree["pressure_field"] = _field_to_tree(spec.pressure_field)
    if spec.body_force is not None:
        bf = spec.body_force
        if isinstance(bf, SpecificWeight):
            tree["body_force"] = {"type": "specific_weight", "axis": bf.axis,
                                  "weight": bf.weight}
        else:
            tree["body_force"] = {"type": "constant", "vector": list(bf.vector)}
    if spec.tags or spec.fixes or spec.loads:
        bcs: dict[str, Any] = {}
        if spec.tags:
            bcs["tags"] = {name: {"type": t.kind, **{k: (list(v) if isinstance(v, (list, tuple))
                                                         else v)
                                                     for k, v in t.params.items()}}
                           for name, t in spec.tags.items()}
        if spec.fixes:
            bcs["fixed"] = [{"tag": f.tag, **({} if f.axis is None else {"axis": f.axis}),
                             "value": f.value} for f in spec.fixes]
        if spec.loads:
            rows = []
            for ld in spec.loads:
                if ld.mode in ("each", "total"):
                    rows.append({"tag": ld.tag, ld.mode: list(ld.vector)})
                else:
                    rows.append({"tag": ld.tag, "radial_total": ld.magnitude,
                                 "center": list(ld.center), "axis": ld.axis})
            bcs["loads"] = rows
        tree["bcs"] = bcs
    if spec.times is not None or spec.load_scale is not None:
        sched: dict[str, Any] = {}
        if spec.times is not None:
            sched["times"] = list(spec.times)
        if spec.load_scale is not None:
            sched["load_scale"] = [list(row) for row in spec.load_scale]
        tree["schedule"] = sched
    tree["solver"] = {"tolerance": spec.tolerance,
                      "linearization": spec.linearization}
    if spec.max_iterations is not None:
        tree["solver"]["max_iterations"] = spec.max_iterations
    tree["output"] = {"formats": list(spec.output_formats), "frames": spec.output_frames}
    return tree


def _field_to_tree(field) -> dict:
    if isinstance(field, TimeScaledPressure):
        base = _field_to_tree(field.base)
        base["time_scale"] = [list(row) for row in np.asarray(field.scale).tolist()]
        return base
    if isinstance(field, ConstantPressure):
        return {"type": "constant", "value": field.value}
    if isinstance(field, HydrostaticPressure):
        return {"type": "hydrostatic", "axis": field.axis, "datum": field.datum,
                "unit_weight": field.unit_weight, "clamp_negative": field.clamp_negative}
    if isinstance(field, AxialRampPressure):
        return {"type": "axial_ramp", "axis": field.axis, "x0": field.x0, "p0": field.p0,
                "x1": field.x1, "p1": field.p1}
    if isinstance(field, RadialRampPressure):
        tree = {"type": "radial_ramp", "center": list(field.center), "axis": field.axis,
                "r_in": field.r_in, "p_in": field.p_in, "r_out": field.r_out,
                "p_out": field.p_out}
        if field.axial_interval is not None:
            tree["axial_interval"] = list(field.axial_interval)
        return tree
    raise ConfigurationError(
        f"cannot serialize pressure field of type {type(field).__name__} "
        f"(a closed-form time scale must be tabulated first)")


def serialize_config(spec: ProblemSpec) -> str:
    return yaml.safe_dump(problem_to_tree(spec), sort_keys=False)


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

@dataclass
class BuiltProblem:
    spec: ProblemSpec
    particles: ParticleSet
    system: object
    bc: BoundaryConditions


def build_problem(spec: ProblemSpec, backend: str | None = None) -> BuiltProblem:
    """Instantiate lattice, neighborhoods, operator arrays, and boundary
    conditions from a validated spec."""
    exclude = None
    if spec.exclude_cylinder is not None:
        ax = spec.exclude_cylinder["axis"]
        center = np.asarray(spec.exclude_cylinder["center"])
        radius = spec.exclude_cylinder["radius"]

        def exclude(x, ax=ax, center=center, radius=radius):
            d = x - center
            d[:, ax] = 0.0
            return (d * d).sum(axis=1) < radius ** 2

    particles = build_lattice(spec.bounds, spec.spacing, exclude=exclude)
    spacing = np.asarray(spec.spacing)
    for name, tag in spec.tags.items():
        particles.add_tag(name, tag.mask(particles, spacing))
    neighbors = build_neighbors(particles, spec.horizon, backend=backend,
                                mirror_axes=spec.mirror_axes,
                                mirror_bounds=spec.bounds)
    system = build_bond_system(particles, neighbors, spec.material,
                               gamma=spec.effective_stress.gamma, backend=backend)
    bc = BoundaryConditions.empty(particles.n)
    for fx in spec.fixes:
        bc.fix(particles.tagged(fx.tag), axis=fx.axis, value=fx.value)
    for ld in spec.loads:
        idx = particles.tagged(ld.tag)
        if idx.size == 0:
            raise ConfigurationError(
                f"config key 'bcs.loads': tag {ld.tag!r} selects no particles")
        if ld.mode == "each":
            bc.load(idx, ld.vector, skip_fixed=True)
        elif ld.mode == "total":
            bc.load(idx, np.asarray(ld.vector) / idx.size, skip_fixed=True)
        else:
            d = particles.positions[idx] - np.asarray(ld.center)
            d[:, ld.axis] = 0.0
            r = np.sqrt((d * d).sum(axis=1))
            if np.any(r <= 0.0):
                raise ConfigurationError(
                    f"config key 'bcs.loads': tag {ld.tag!r} contains particles on the "
                    f"radial-load axis (direction undefined)")
            vectors = (ld.magnitude / idx.size) * d / r[:, None]
            for i, vec in zip(idx, vectors):
                bc.load(int(i), vec, skip_fixed=True)
    for ax in spec.mirror_axes:
        if not bc.fixed[:, ax].all():
            raise ConfigurationError(
                f"config key 'lattice.mirror_axes': axis {ax} is mirrored, so its "
                f"displacement component must be fixed on every particle (image "
                f"displacements are read unreflected, which is only exact when "
                f"the mirrored components vanish)")
    return BuiltProblem(spec=spec, particles=particles, system=system, bc=bc)


def run_problem(spec: ProblemSpec, backend: str | None = None, on_step=None):
    """Build and solve; returns ``(result, built)``."""
    built = build_problem(spec, backend=backend)
    scale = None if spec.load_scale is None else np.asarray(spec.load_scale)
    result = solve_quasistatic(
        built.system, built.bc, body_force=spec.body_force,
        pore_field=spec.pressure_field, times=spec.times, load_scale=scale,
        geometric=(spec.linearization == "fixed_point_M"),
        tol=spec.tolerance, max_iter=spec.max_iterations, on_step=on_step)
    return result, built
