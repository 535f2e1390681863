"""Declarative scenario documents: parsing, validation, execution, serialization.

Scenario files are strict YAML (unknown keys are errors).  Angles are given
in units of pi so closed-form test points stay exactly representable; they
are converted to radians at binding time.  Output is deterministic:
identical inputs produce bit-identical CSV and record streams.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
import yaml

from .dynamics import (
    VARIANTS,
    CouplingSpec,
    evolve_exact,
    fit_effective_weak_value,
    post_select_meter,
)
from .errors import (
    ParameterRangeError,
    ScenarioSyntaxError,
    UnknownIdError,
    UnknownKeyError,
    WeakmeterError,
)
from .hilbert import extend
from .meter import make_meter, meter_readout
from .optics import STATE_IDS, named_state
from .weakvalue import observable, observable_ids, weak_value

__all__ = [
    "DEFAULTS",
    "ScenarioDoc",
    "ResultRecord",
    "parse_scenario",
    "scenario_to_text",
    "apply_override",
    "run_scenario",
    "records_to_csv",
    "records_to_jsonl",
    "CSV_COLUMNS",
]

DEFAULTS = {
    "meter": {"N": 64, "delta": 4.0},
    "coupling": {"variant": "noiseless_kick", "g": 1e-3, "gprime": 1e-3, "t": 1.0,
                 "kick_time": None, "measure_arm": None, "kick_sign": 1},
}

_TOP_KEYS = ("name", "preselect", "postselect", "coupling", "meter", "observables", "sweep")
_COUPLING_KEYS = tuple(DEFAULTS["coupling"])
_METER_KEYS = ("N", "delta")
_SWEEP_KEYS = ("start", "stop", "steps", "values")
# residuals above this mark the exponential-shift fit as unreliable
MAX_FIT_RESIDUAL = 1e-2


@dataclass(frozen=True)
class ScenarioDoc:
    """Validated scenario with all defaults filled (angles in units of pi)."""

    name: str
    preselect: dict
    postselect: dict
    coupling: dict
    meter: dict
    observables: tuple[str, ...]
    sweep: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "preselect": dict(self.preselect),
            "postselect": dict(self.postselect),
            "coupling": dict(self.coupling),
            "meter": dict(self.meter),
            "observables": list(self.observables),
            "sweep": {k: dict(v) for k, v in self.sweep.items()},
        }

    def config_hash(self) -> str:
        return hashlib.sha256(scenario_to_text(self).encode("utf-8")).hexdigest()


def scenario_to_text(doc: ScenarioDoc) -> str:
    return yaml.safe_dump(doc.to_dict(), sort_keys=True, default_flow_style=False)


def _reject_unknown(mapping: dict, allowed, where: str) -> None:
    unknown = [k for k in mapping if k not in allowed]
    if unknown:
        raise UnknownKeyError(f"unknown key(s) {unknown} in {where}; allowed: {sorted(allowed)}")


def _require_number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParameterRangeError(f"{where} must be a number, got {value!r}")
    return float(value)


def _validate_state(section, where: str) -> dict:
    if not isinstance(section, dict):
        raise ScenarioSyntaxError(f"{where} must be a mapping with an 'id'")
    if "id" not in section:
        raise ParameterRangeError(f"{where} needs an 'id' field")
    state_id = section["id"]
    if state_id not in STATE_IDS:
        raise UnknownIdError(
            f"unknown state id {state_id!r} in {where}; valid ids: {sorted(STATE_IDS)}"
        )
    needs = STATE_IDS[state_id]
    _reject_unknown(section, ("id",) + needs, where)
    out = {"id": state_id}
    for param in needs:
        if param not in section:
            raise ParameterRangeError(f"{where}: state {state_id!r} requires {param!r}")
        value = _require_number(section[param], f"{where}.{param}")
        if param == "theta" and not -1.0 < value < 1.0:
            raise ParameterRangeError(
                f"{where}.theta = {value} out of range (-1, 1) (units of pi)"
            )
        if param == "alpha" and not -1.0 < value < 1.0:
            raise ParameterRangeError(
                f"{where}.alpha = {value} out of range (-1, 1) (units of pi)"
            )
        out[param] = value
    return out


def _validate_coupling(section) -> dict:
    if section is None:
        return dict(DEFAULTS["coupling"])
    if not isinstance(section, dict):
        raise ScenarioSyntaxError("coupling must be a mapping")
    _reject_unknown(section, _COUPLING_KEYS, "coupling")
    out = dict(DEFAULTS["coupling"])
    out.update(section)
    if out["variant"] not in VARIANTS:
        raise UnknownIdError(
            f"unknown coupling variant {out['variant']!r}; valid: {VARIANTS}"
        )
    for key in ("g", "gprime", "t"):
        out[key] = _require_number(out[key], f"coupling.{key}")
    if out["g"] < 0 or out["gprime"] < 0:
        raise ParameterRangeError("coupling constants g, gprime must be nonnegative")
    if out["t"] <= 0:
        raise ParameterRangeError(f"coupling.t must be positive, got {out['t']}")
    if out["kick_time"] is not None:
        out["kick_time"] = _require_number(out["kick_time"], "coupling.kick_time")
        if not 0.0 <= out["kick_time"] <= out["t"]:
            raise ParameterRangeError(
                f"coupling.kick_time = {out['kick_time']} outside [0, t={out['t']}]"
            )
    if out["measure_arm"] not in (None, "L", "R"):
        raise ParameterRangeError(f"coupling.measure_arm must be L or R, got {out['measure_arm']!r}")
    if out["kick_sign"] not in (1, -1):
        raise ParameterRangeError(f"coupling.kick_sign must be 1 or -1, got {out['kick_sign']!r}")
    return out


def _validate_meter(section) -> dict:
    if section is None:
        return dict(DEFAULTS["meter"])
    if not isinstance(section, dict):
        raise ScenarioSyntaxError("meter must be a mapping")
    _reject_unknown(section, _METER_KEYS, "meter")
    out = dict(DEFAULTS["meter"])
    out.update(section)
    if isinstance(out["N"], bool) or not isinstance(out["N"], int) or out["N"] < 1:
        raise ParameterRangeError(f"meter.N must be a positive integer, got {out['N']!r}")
    out["delta"] = _require_number(out["delta"], "meter.delta")
    if out["delta"] <= 0:
        raise ParameterRangeError(f"meter.delta must be positive, got {out['delta']}")
    return out


def _validate_observables(section) -> tuple[str, ...]:
    if section is None:
        return ()
    if not isinstance(section, list):
        raise ScenarioSyntaxError("observables must be a list of catalog ids")
    valid = observable_ids()
    for obs in section:
        if obs not in valid:
            raise UnknownIdError(
                f"unknown observable {obs!r} in observables; valid ids: {list(valid)}"
            )
    return tuple(section)


def _resolve_path(data: dict, path: str):
    node = data
    parts = path.split(".")
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise UnknownKeyError(f"path {path!r} does not address a scenario field")
        node = node[part]
    if not isinstance(node, dict) or parts[-1] not in node:
        raise UnknownKeyError(f"path {path!r} does not address a scenario field")
    return node, parts[-1]


def _validate_sweep(section, doc_dict: dict) -> dict:
    if section is None:
        return {}
    if not isinstance(section, dict):
        raise ScenarioSyntaxError("sweep must map dotted parameter paths to ranges")
    out = {}
    for path, spec in section.items():
        node, leaf = _resolve_path(doc_dict, path)
        if not isinstance(node[leaf], (int, float)) or isinstance(node[leaf], bool):
            raise ParameterRangeError(f"sweep path {path!r} must address a numeric field")
        if not isinstance(spec, dict):
            raise ScenarioSyntaxError(f"sweep.{path} must be a mapping")
        _reject_unknown(spec, _SWEEP_KEYS, f"sweep.{path}")
        if "values" in spec:
            if set(spec) != {"values"}:
                raise ParameterRangeError(
                    f"sweep.{path}: give either values or start/stop/steps, not both"
                )
            values = spec["values"]
            if not isinstance(values, list) or not values:
                raise ParameterRangeError(f"sweep.{path}.values must be a nonempty list")
            out[path] = {"values": [_require_number(v, f"sweep.{path}.values") for v in values]}
        else:
            missing = [k for k in ("start", "stop", "steps") if k not in spec]
            if missing:
                raise ParameterRangeError(f"sweep.{path} missing {missing}")
            steps = spec["steps"]
            if isinstance(steps, bool) or not isinstance(steps, int) or steps < 1:
                raise ParameterRangeError(f"sweep.{path}.steps must be an integer >= 1")
            out[path] = {
                "start": _require_number(spec["start"], f"sweep.{path}.start"),
                "stop": _require_number(spec["stop"], f"sweep.{path}.stop"),
                "steps": steps,
            }
    return out


def _validate(raw: dict) -> ScenarioDoc:
    if not isinstance(raw, dict):
        raise ScenarioSyntaxError("scenario document must be a mapping")
    _reject_unknown(raw, _TOP_KEYS, "scenario")
    if "name" not in raw or not isinstance(raw["name"], str) or not raw["name"]:
        raise ParameterRangeError("scenario needs a nonempty string 'name'")
    for required in ("preselect", "postselect"):
        if required not in raw:
            raise ParameterRangeError(f"scenario needs a {required!r} section")
    pre = _validate_state(raw["preselect"], "preselect")
    post = _validate_state(raw["postselect"], "postselect")
    coupling = _validate_coupling(raw.get("coupling"))
    meter = _validate_meter(raw.get("meter"))
    observables = _validate_observables(raw.get("observables"))
    base = {
        "name": raw["name"],
        "preselect": pre,
        "postselect": post,
        "coupling": coupling,
        "meter": meter,
        "observables": list(observables),
    }
    sweep = _validate_sweep(raw.get("sweep"), base)
    return ScenarioDoc(
        name=raw["name"], preselect=pre, postselect=post, coupling=coupling,
        meter=meter, observables=observables, sweep=sweep,
    )


def parse_scenario(text: str) -> ScenarioDoc:
    """Parse and strictly validate a scenario document.

    Defaults: meter N=64, delta=4; coupling g=1e-3, gprime=1e-3, t=1,
    kick_time unset (the kick then fires at the end of the noise window).
    """
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        if mark is not None:
            raise ScenarioSyntaxError(str(getattr(exc, "problem", exc)),
                                      line=mark.line + 1, column=mark.column + 1) from exc
        raise ScenarioSyntaxError(str(exc)) from exc
    if raw is None:
        raise ScenarioSyntaxError("scenario document is empty")
    return _validate(raw)


def apply_override(doc: ScenarioDoc, path: str, value) -> ScenarioDoc:
    """Set one dotted-path field (e.g. coupling.g) and re-validate strictly.

    A leaf outside the schema is rejected by the strict re-validation, so
    unknown override paths surface as :class:`UnknownKeyError`.
    """
    data = doc.to_dict()
    parts = path.split(".")
    node = data
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise UnknownKeyError(f"override path {path!r} does not address a scenario field")
        node = node[part]
    if not isinstance(node, dict):
        raise UnknownKeyError(f"override path {path!r} does not address a scenario field")
    node[parts[-1]] = value
    return _validate(data)


@dataclass(frozen=True)
class ResultRecord:
    """One sweep point: weak values, meter readout, pointer fit, provenance."""

    scenario: str
    point: dict
    weak_values: dict
    mean_q: float | None = None
    mean_p: float | None = None
    var_q: float | None = None
    var_p: float | None = None
    success_probability: float | None = None
    fit_value: complex | None = None
    fit_offset: complex | None = None
    fit_residual: float | None = None
    config_hash: str = ""
    error: str = ""


def _sweep_points(doc: ScenarioDoc):
    paths = list(doc.sweep)
    if not paths:
        yield {}
        return
    grids = []
    for path in paths:
        spec = doc.sweep[path]
        if "values" in spec:
            grids.append([float(v) for v in spec["values"]])
        else:
            grids.append([float(v) for v in
                          np.linspace(spec["start"], spec["stop"], spec["steps"])])
    index = [0] * len(paths)
    while True:
        yield {path: grids[i][index[i]] for i, path in enumerate(paths)}
        for i in reversed(range(len(paths))):
            index[i] += 1
            if index[i] < len(grids[i]):
                break
            index[i] = 0
        else:
            return


def _angles(section: dict) -> dict:
    return {k: float(v) * np.pi for k, v in section.items() if k != "id"}


def _run_point(doc: ScenarioDoc, chash: str, point: dict) -> ResultRecord:
    for path, value in point.items():
        doc = apply_override(doc, path, value)
    coupling = doc.coupling
    orbital_dim = 3 if coupling["variant"] in ("parallel_1", "parallel_2") else 2
    weak_values: dict = {}
    try:
        pre = named_state(doc.preselect["id"], orbital_dim=orbital_dim,
                          **_angles(doc.preselect))
        post = named_state(doc.postselect["id"], orbital_dim=orbital_dim,
                           **_angles(doc.postselect))
        gprime_t = coupling["gprime"] * coupling["t"]
        for obs_id in doc.observables:
            op = observable(obs_id, orbital_dim=orbital_dim, gprime_t=gprime_t)
            weak_values[obs_id] = weak_value(pre, post, extend(op, pre.signature)).value

        meter = make_meter(doc.meter["N"], doc.meter["delta"])
        spec = CouplingSpec(
            variant=coupling["variant"], g=coupling["g"], gprime=coupling["gprime"],
            t=coupling["t"], kick_time=coupling["kick_time"],
            measure_arm=coupling["measure_arm"], kick_sign=coupling["kick_sign"],
        )
        joint = evolve_exact(spec, pre, meter)
        final = post_select_meter(joint, post)
        readout = meter_readout(final)
        fit = fit_effective_weak_value(final, meter, spec.fit_coupling)
        error = ""
        if fit.residual > MAX_FIT_RESIDUAL:
            error = f"fit-residual: {fit.residual:.3e} exceeds {MAX_FIT_RESIDUAL:.0e}"
        return ResultRecord(
            scenario=doc.name, point=point, weak_values=weak_values,
            mean_q=readout.mean_q, mean_p=readout.mean_p,
            var_q=readout.var_q, var_p=readout.var_p,
            success_probability=readout.success_probability,
            fit_value=fit.value, fit_offset=fit.offset, fit_residual=fit.residual,
            config_hash=chash, error=error,
        )
    except WeakmeterError as exc:
        kind = type(exc).__name__
        return ResultRecord(
            scenario=doc.name, point=point, weak_values=weak_values,
            config_hash=chash, error=f"{kind}: {exc}",
        )


def run_scenario(doc: ScenarioDoc) -> list[ResultRecord]:
    """Execute every sweep point in deterministic declaration order.

    Degenerate post-selections and annihilated meters become per-record
    error fields; they never abort the remaining points.
    """
    chash = doc.config_hash()
    return [_run_point(doc, chash, point) for point in _sweep_points(doc)]


CSV_COLUMNS = ("scenario", "observable", "wv_re", "wv_im", "mean_q", "mean_p",
               "success_prob", "fit_re", "fit_im", "residual", "error")


def _fmt(value) -> str:
    if value is None:
        return ""
    return f"{value:.17g}"


def records_to_csv(records, sweep_paths=()) -> str:
    """Flat CSV, one line per (record, observable); 17 significant digits.

    Sweep parameter columns (named by their dotted paths) sit between the
    scenario and observable columns.
    """
    paths = list(sweep_paths)
    header = ["scenario"] + paths + list(CSV_COLUMNS[1:])
    lines = [",".join(header)]
    for rec in records:
        base = [rec.scenario] + [_fmt(rec.point.get(p)) for p in paths]
        tail = [
            _fmt(rec.mean_q), _fmt(rec.mean_p), _fmt(rec.success_probability),
            _fmt(rec.fit_value.real if rec.fit_value is not None else None),
            _fmt(rec.fit_value.imag if rec.fit_value is not None else None),
            _fmt(rec.fit_residual),
            '"' + rec.error.replace('"', "'") + '"' if rec.error else "",
        ]
        if rec.weak_values:
            for obs_id, value in rec.weak_values.items():
                row = base + [obs_id, _fmt(value.real), _fmt(value.imag)] + tail
                lines.append(",".join(row))
        else:
            lines.append(",".join(base + ["", "", ""] + tail))
    return "\n".join(lines) + "\n"


def _json_value(value):
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    return value


def records_to_jsonl(records) -> str:
    """Structured record stream: one JSON object per line, sorted keys."""
    lines = []
    for rec in records:
        obj = {
            "scenario": rec.scenario,
            "point": rec.point,
            "weak_values": {k: _json_value(v) for k, v in rec.weak_values.items()},
            "mean_q": rec.mean_q,
            "mean_p": rec.mean_p,
            "var_q": rec.var_q,
            "var_p": rec.var_p,
            "success_probability": rec.success_probability,
            "fit_value": _json_value(rec.fit_value),
            "fit_offset": _json_value(rec.fit_offset),
            "fit_residual": rec.fit_residual,
            "config_hash": rec.config_hash,
            "error": rec.error,
        }
        lines.append(json.dumps(obj, sort_keys=True, allow_nan=True))
    return "\n".join(lines) + "\n"
