"""
Named, seeded scenarios with machine-readable run records.

A config is a small mapping::

    scenario: kuperberg
    seed: 7
    params:
      eps_deg: 10
      n_pairs: 100

Normalization fills defaults, coerces numbers to the declared type and sorts
parameter keys; the normalized mapping is echoed verbatim in the record.
Only the ``payload`` is covered by the determinism contract; ``duration_s``
is wall-clock time and varies between runs.
"""

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from . import analysis as an
from . import channels as ch
from . import codes as cd
from . import evolve as ev
from . import experiments as ex
from . import qmath

SCHEMA_VERSION = "1.0"
CONFIG_VERSION = 1
MAX_SEED = 2**64 - 1
CSV_LEADING_COLUMNS = ["schema_version", "scenario", "seed", "library_version", "status", "duration_s"]


class ConfigError(ValueError):
    """Invalid scenario configuration (a usage error, not a runtime failure)."""


# -- catalog -----------------------------------------------------------------

def _num(default, minimum=None, maximum=None, exclusive_minimum=None, doc=""):
    spec = {"type": "number", "default": default, "description": doc}
    if minimum is not None:
        spec["minimum"] = minimum
    if maximum is not None:
        spec["maximum"] = maximum
    if exclusive_minimum is not None:
        spec["exclusiveMinimum"] = exclusive_minimum
    return spec


def _int(default, minimum=1, maximum=None, doc=""):
    spec = {"type": "integer", "default": default, "minimum": minimum, "description": doc}
    if maximum is not None:
        spec["maximum"] = maximum
    return spec


def _enum(default, options, doc=""):
    return {"type": "string", "default": default, "enum": list(options), "description": doc}


def _rate(default, doc=""):
    return _num(default, 0.0, 1.0, doc=doc)


_MODES = ("pearson", "covariance")
_SMOOTHING = ("causal", "full_interval")


@dataclass
class Scenario:
    name: str
    anchor: str
    summary: str
    params: dict
    run: object = field(repr=False)

    def param_schema(self):
        return {
            "type": "object",
            "additionalProperties": False,
            "required": sorted(self.params),
            "properties": {k: dict(v) for k, v in sorted(self.params.items())},
        }

    def defaults(self):
        return {k: v["default"] for k, v in sorted(self.params.items())}


# -- scenario bodies ---------------------------------------------------------

def _run_kuperberg(p, seed):
    kernel = ev.SmoothingKernel.raised_cosine(p["kernel_width"])
    run = ev.alternating_sequence(p["eps_deg"], p["delta_deg"], p["n_pairs"], variant=p["variant"],
                                  seed=seed, kernel=kernel, mode=p["smoothing_mode"])
    final = run.result.final
    payload = {
        "variant": p["variant"],
        "bit_survival_fidelity": run.bit_survival_fidelity(),
        "state_fidelity": run.state_fidelity(),
        "final_bloch": qmath.bloch_vector(final).tolist(),
        "distance_to_maximally_mixed": qmath.trace_distance(final, qmath.maximally_mixed(1)),
        "superoperator_real": np.real(run.superop).tolist(),
        "superoperator_imag": np.imag(run.superop).tolist(),
    }
    return payload, dict(run.result.diagnostics), run.result.flagged


def _run_conjecture1(code):
    def body(p, seed):
        res = ex.conjecture1_experiment(code, steps=p["steps"], fault_rate=p["fault_rate"],
                                        angle=np.deg2rad(p["angle_deg"]),
                                        kernel_width=p["kernel_width"],
                                        trajectories=p["trajectories"], seed=seed,
                                        alpha_tol=p["alpha_tol"])
        ratio = res["spread_ratio"]
        if math.isinf(ratio):
            res["spread_ratio_status"] = "markovian_arm_sharp"
        elif math.isnan(ratio):
            res["spread_ratio_status"] = "both_arms_sharp"
        else:
            res["spread_ratio_status"] = "finite"
        diag = {"alpha_relative_mismatch": res["alpha_relative_mismatch"],
                "sharp_spread_threshold": cd.SHARP_SPREAD}
        return res, diag, not res["alpha_matched"]
    return body


def _run_haar_sync(p, seed):
    stats = an.haar_weight_experiment(p["n"], p["target_alpha_fraction"], p["samples"], seed)
    n = p["n"]
    hist = np.asarray(stats.weight_histogram)
    sync = an.sync_report(ch.WeightProfile(hist), p["c1"], p["c2"], p["delta"])
    mean_w = stats.mean_conditional_weight
    payload = {
        "stats": stats.to_dict(),
        "expected_histogram": an.haar_expected_weight_histogram(n).tolist(),
        "conditional_weight_fraction": None if mean_w is None else mean_w / n,
        "relative_deviation_from_three_quarters": None if mean_w is None else (mean_w / n - 0.75) / 0.75,
        "sync": sync.to_dict(),
    }
    diag = {"normalization_error": stats.normalization_error, "bisection_failures": len(stats.failures)}
    return payload, diag, stats.normalization_error > 1e-9 or bool(stats.failures)


def _cor2q_family(p, seed):
    qs = np.linspace(0.05, 1.0, 20)
    yield from an.all_or_nothing_family(range(2, p["aon_n_max"] + 1), qs)
    yield from an.random_mixture_family(p["n"], p["random_count"], np.random.default_rng(seed))


def _run_cor2q(p, seed):
    if not (p["eta"] < 1 / 20 and p["s"] > 4 * p["eta"]):
        raise ConfigError("cor2q_sweep needs eta < 1/20 and s > 4 eta")
    rep = an.prop_cor2q_check(_cor2q_family(p, seed), p["eta"], p["s"], p["mode"])
    payload = rep.to_dict()
    payload["violation_count"] = len(rep.violations)
    return payload, {"members": rep.checked + rep.skipped}, bool(rep.violations)


def _run_threshold(p, seed):
    n, rate = p["n"], p["p"]
    models = {
        "independent": ch.depolarizing(rate, n),
        # every qubit faulty with probability rate: same alpha as the independent model
        "synchronized": ch.synchronized(n, rate),
    }
    payload, diag = {}, {}
    for name, channel in models.items():
        rich = ch.chi_diagonal(channel)
        payload[name] = {
            "threshold": an.threshold_compatibility_report(rich, p["eps0"], p["mode"]).to_dict(),
            "sync": an.sync_report(rich).to_dict(),
        }
        diag[f"{name}_normalization_error"] = abs(float(rich.probs.sum()) - 1.0)
    return payload, diag, any(v > 1e-9 for v in diag.values())


def _conj1_params(steps, trajectories):
    return {
        "steps": _int(steps, doc="rotation cycles per trajectory"),
        "fault_rate": _rate(0.02, doc="per-cycle probability of one single-qubit Pauli fault (smoothed arm)"),
        "angle_deg": _num(90.0, doc="total logical X rotation angle"),
        "kernel_width": _num(0.5, exclusive_minimum=0.0, doc="raised-cosine support as a fraction of the run"),
        "trajectories": _int(trajectories, minimum=2),
        "alpha_tol": _num(0.05, exclusive_minimum=0.0, doc="allowed relative alpha mismatch between arms"),
    }


CATALOG = {
    s.name: s for s in [
        Scenario(
            "kuperberg",
            "alternating X/Z example, averaged and smoothed forms",
            "One qubit alternating X(eps) with a random +-delta Z rotation.",
            {
                "eps_deg": _num(10.0),
                "delta_deg": _num(20.0),
                "n_pairs": _int(100),
                "variant": _enum("averaged", ("averaged", "unitary_sample", "smoothed")),
                "kernel_width": _num(0.25, exclusive_minimum=0.0),
                "smoothing_mode": _enum("causal", _SMOOTHING),
            },
            _run_kuperberg,
        ),
        Scenario(
            "steane_conjecture1",
            "codeword mixtures under smoothed vs local noise, Steane code",
            "Logical-parameter spread of Steane-encoded trajectories, both arms at matched alpha.",
            _conj1_params(20, 100),
            _run_conjecture1(cd.steane_code()),
        ),
        Scenario(
            "toric_conjecture1",
            "codeword mixtures under smoothed vs local noise, toric code L=2",
            "Same experiment on the 8-qubit toric code (logical qubit 0).",
            _conj1_params(20, 100),
            _run_conjecture1(cd.toric_code(2)),
        ),
        Scenario(
            "haar_sync",
            "Pauli weight of Haar-random unitaries concentrates near 3n/4",
            "Pauli-weight statistics and synchronization flags for Haar unitaries.",
            {
                "n": _int(6, maximum=10),
                "samples": _int(200),
                "target_alpha_fraction": {"type": ["number", "null"], "default": None, "minimum": 0.0,
                                          "maximum": 1.0,
                                          "description": "pull unitaries toward I until alpha/n matches"},
                "c1": _num(an.DEFAULT_C1, exclusive_minimum=0.0),
                "c2": _num(an.DEFAULT_C2, exclusive_minimum=0.0),
                "delta": _num(an.DEFAULT_DELTA, 0.0, 0.75),
            },
            _run_haar_sync,
        ),
        Scenario(
            "cor2q_sweep",
            "tail bound for pairwise-correlated bits",
            "Exact tail check over all-or-nothing and randomized correlated-bit mixtures.",
            {
                "n": _int(8, minimum=2, maximum=10),
                "random_count": _int(10000, minimum=0),
                "aon_n_max": _int(10, minimum=2, maximum=10),
                "eta": _num(0.04, exclusive_minimum=0.0, maximum=0.05),
                "s": _num(0.2, exclusive_minimum=0.0, maximum=1.0),
                "mode": _enum("pearson", _MODES),
            },
            _run_cor2q,
        ),
        Scenario(
            "threshold_signature",
            "noise-model signatures assumed by threshold theorems",
            "Weight-profile decay and pair independence: independent vs synchronized noise at equal alpha.",
            {
                "n": _int(6, minimum=2, maximum=7),
                "p": _rate(0.01),
                "eps0": _num(an.DEFAULT_EPS0, minimum=0.0),
                "mode": _enum("pearson", _MODES),
            },
            _run_threshold,
        ),
    ]
}


def list_scenarios():
    """Catalog entries in stable (definition) order."""
    return [
        {"name": s.name, "anchor": s.anchor, "summary": s.summary,
         "defaults": s.defaults(), "params": s.param_schema()}
        for s in CATALOG.values()
    ]


# -- config normalization ----------------------------------------------------

def _coerce(name, value, spec):
    types = spec["type"] if isinstance(spec["type"], list) else [spec["type"]]
    if value is None:
        if "null" in types:
            return None
        raise ConfigError(f"parameter {name!r} may not be null")
    if isinstance(value, bool):
        raise ConfigError(f"parameter {name!r} must be {spec['type']}, got a boolean")
    if "integer" in types:
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, (int, np.integer)):
            raise ConfigError(f"parameter {name!r} must be an integer, got {value!r}")
        value = int(value)
    elif "number" in types:
        if not isinstance(value, (int, float, np.integer, np.floating)):
            raise ConfigError(f"parameter {name!r} must be a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"parameter {name!r} must be finite")
    elif "string" in types:
        if value not in spec["enum"]:
            raise ConfigError(f"parameter {name!r} must be one of {spec['enum']}, got {value!r}")
        return value
    if "minimum" in spec and value < spec["minimum"]:
        raise ConfigError(f"parameter {name!r} must be >= {spec['minimum']}, got {value}")
    if "maximum" in spec and value > spec["maximum"]:
        raise ConfigError(f"parameter {name!r} must be <= {spec['maximum']}, got {value}")
    if "exclusiveMinimum" in spec and value <= spec["exclusiveMinimum"]:
        raise ConfigError(f"parameter {name!r} must be > {spec['exclusiveMinimum']}, got {value}")
    return value


def normalize_config(config):
    """Validated config with defaults filled; raises :class:`ConfigError`."""
    if not isinstance(config, dict):
        raise ConfigError("config must be a mapping")
    extra = set(config) - {"config_version", "scenario", "seed", "params"}
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")
    version = config.get("config_version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config_version {version!r}")
    name = config.get("scenario")
    if name not in CATALOG:
        raise ConfigError(f"unknown scenario {name!r}; choose from {list(CATALOG)}")
    seed = config.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed <= MAX_SEED:
        raise ConfigError(f"seed must be an integer in [0, 2^64 - 1], got {seed!r}")
    scen = CATALOG[name]
    given = config.get("params") or {}
    if not isinstance(given, dict):
        raise ConfigError("params must be a mapping")
    unknown = set(given) - set(scen.params)
    if unknown:
        raise ConfigError(f"unknown parameters for {name}: {sorted(unknown)}")
    params = {k: _coerce(k, given.get(k, spec["default"]), spec) for k, spec in sorted(scen.params.items())}
    return {"config_version": CONFIG_VERSION, "scenario": name, "seed": int(seed), "params": params}


# -- records -----------------------------------------------------------------

def _plain(obj, path, nonfinite):
    """JSON-ready copy: numpy types to builtins, non-finite floats to None (paths recorded)."""
    if isinstance(obj, dict):
        return {str(k): _plain(v, f"{path}.{k}" if path else str(k), nonfinite) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v, f"{path}[{i}]", nonfinite) for i, v in enumerate(obj)]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            nonfinite[path] = repr(x)
            return None
        return x
    if isinstance(obj, (complex, np.complexfloating)):
        raise TypeError(f"complex value at {path}; split into real and imaginary parts")
    return obj


def run_scenario(config):
    """Run a scenario and return its record (a plain dict, see the JSON schema)."""
    cfg = normalize_config(config)
    scen = CATALOG[cfg["scenario"]]
    start = time.perf_counter()
    # trajectory loops may use threads; BLAS stays single-threaded so sums are order-stable
    with threadpool_limits(limits=1):
        payload, diagnostics, flagged = scen.run(dict(cfg["params"]), cfg["seed"])
    duration = time.perf_counter() - start
    nonfinite = {}
    payload = _plain(payload, "", nonfinite)
    diagnostics = _plain(diagnostics, "", {})
    diagnostics["nonfinite_fields"] = dict(sorted(nonfinite.items()))
    return {
        "schema_version": SCHEMA_VERSION,
        "config": cfg,
        "library_version": __version__,
        "duration_s": duration,
        "status": "flagged" if flagged else "ok",
        "payload": payload,
        "diagnostics": diagnostics,
    }


def format_float(x):
    """17 significant digits, always parseable back as a float."""
    s = format(x, ".17g")
    return s if any(c in s for c in ".en") else s + ".0"


def dumps(obj, indent=2, _level=0):
    """JSON text with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError("non-finite float in record")
        return format_float(obj)
    return json.dumps(obj)


def payload_bytes(record):
    """Canonical bytes of the results payload, the unit of the determinism contract."""
    return dumps(record["payload"]).encode()


def flatten_scalars(obj, prefix=""):
    """Dotted-path mapping of every scalar leaf reachable through dicts (lists are skipped)."""
    out = {}
    for k, v in obj.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(flatten_scalars(v, key + "."))
        elif not isinstance(v, list):
            out[key] = v
    return out


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format_float(v)
    return str(v)


def csv_columns(record):
    """Leading columns, then ``payload.``-prefixed scalar payload paths in sorted order."""
    return CSV_LEADING_COLUMNS + sorted("payload." + k for k in flatten_scalars(record["payload"]))


def to_csv(record):
    flat = {f"payload.{k}": v for k, v in flatten_scalars(record["payload"]).items()}
    lead = {
        "schema_version": record["schema_version"],
        "scenario": record["config"]["scenario"],
        "seed": record["config"]["seed"],
        "library_version": record["library_version"],
        "status": record["status"],
        "duration_s": record["duration_s"],
    }
    cols = csv_columns(record)
    row = {**lead, **flat}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    w.writerow([_csv_cell(row[c]) for c in cols])
    return buf.getvalue()


def emit(record, path=None, fmt="json"):
    """Serialize a record; write it to ``path`` if given and return the text."""
    if fmt == "json":
        text = dumps(record) + "\n"
    elif fmt == "csv":
        text = to_csv(record)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def run_record_schema():
    """The published JSON schema for run records."""
    text = resources.files("noisyqc").joinpath("schema/run_record.schema.json").read_text("utf-8")
    return json.loads(text)
