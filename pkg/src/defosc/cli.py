"""Command line interface: ``defosc evolve | steady | scan``.

Exit codes: 0 success, 1 invalid input or unusable model, 2 guard-band
alarm, 3 positivity alarm. Alarm runs still write their full output.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import os
import platform
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .bath import BathError, BathSpec, bath_from_config, build_coefficients
from .deformation import DeformationError, DeformationProfile, build_spectrum, profile_from_config
from .dynamics import (
    IntegrationError,
    IntegratorConfig,
    evolve,
    steady_state_closed_form,
    steady_state_detailed_balance,
    steady_state_numeric,
)
from .liouvillian import LiouvillianError, assemble_dense, build_stencil, dense_to_json
from .states import (
    ObservableRecord,
    StateError,
    f_coherent_state,
    fock_state,
    load_state,
    save_state,
    state_to_dict,
    thermal_steady_state,
)

log = logging.getLogger("defosc")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_GUARD = 2
EXIT_POSITIVITY = 3
EXIT_CODES = {
    "completed": EXIT_OK,
    "converged_to_steady": EXIT_OK,
    "guard_band_alarm": EXIT_GUARD,
    "positivity_alarm": EXIT_POSITIVITY,
}

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NUM_LIST = {"type": "array", "items": _NUM}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


CONFIG_SCHEMA = _obj(
    {
        "deformation": {
            "oneOf": [
                _obj({"kind": {"const": "identity"}}, ["kind"]),
                _obj({"kind": {"enum": ["q", "q_deformed"]}, "lambda": {"type": "number", "minimum": 0}},
                     ["kind", "lambda"]),
                _obj({"kind": {"const": "harmonious"}}, ["kind"]),
                _obj({"kind": {"const": "power"}, "p": _NUM}, ["kind", "p"]),
                _obj({"kind": {"const": "tabulated"}, "values": _NUM_LIST}, ["kind", "values"]),
            ]
        },
        "bath": {
            "oneOf": [
                _obj({"kind": {"const": "thermal"}, "gamma": _POS, "beta": _POS}, ["kind", "gamma", "beta"]),
                _obj({"kind": {"const": "squeezed"}, "gamma": _POS, "beta": _POS,
                      "r": {"type": "number", "minimum": 0}, "theta": _NUM}, ["kind", "gamma", "r"]),
                _obj({"kind": {"const": "custom"}, "gamma": _POS, "N": _NUM_LIST, "M_re": _NUM_LIST,
                      "M_im": _NUM_LIST}, ["kind", "gamma", "N"]),
            ]
        },
        "n_trunc": {"type": "integer", "minimum": 1},
        "initial_state": {
            "oneOf": [
                _obj({"kind": {"const": "fock"}, "n": {"type": "integer", "minimum": 0}}, ["kind", "n"]),
                _obj({"kind": {"const": "f_coherent"}, "alpha_re": _NUM, "alpha_im": _NUM}, ["kind", "alpha_re"]),
                _obj({"kind": {"const": "thermal"}, "beta": _POS}, ["kind", "beta"]),
                _obj({"kind": {"const": "state_file"}, "path": {"type": "string"}}, ["kind", "path"]),
            ]
        },
        "integrator": _obj(
            {
                "method": {"enum": ["rk4_fixed", "rk4_adaptive"]},
                "dt": _POS,
                "t_end": _POS,
                "sample_every": {"type": "integer", "minimum": 1},
                "adapt_tol": _POS,
                "guard_threshold": _POS,
                "pos_tol": _POS,
                "steady_tol": _POS,
                "dt_max": _POS,
            },
            ["dt", "t_end"],
        ),
        "outputs": _obj(
            {"dir": {"type": "string"}, "snapshots": {"type": "boolean"}, "dump_liouvillian": {"type": "boolean"}}
        ),
        # written into meta.json; ignored when a meta file is re-used as config
        "meta": {"type": "object"},
    },
    ["deformation", "bath", "n_trunc", "initial_state", "integrator"],
)


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    raw: dict
    profile: DeformationProfile
    bath: BathSpec
    n_trunc: int
    initial_state: dict
    integrator: IntegratorConfig
    out_dir: Path
    snapshots: bool = False
    dump_liouvillian: bool = False
    base_dir: Path = Path(".")


def _error_path(err) -> str:
    return ".".join(str(p) for p in err.absolute_path) or "<root>"


def validate_config(raw: dict) -> None:
    """Schema check with the offending field path in the message."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        lines = []
        for err in errors:
            if err.context:
                # oneOf: report the branch that came closest to matching
                err = jsonschema.exceptions.best_match(err.context)
            lines.append(f"{_error_path(err)}: {err.message}")
        raise ConfigError("invalid config:\n  " + "\n  ".join(lines))


def parse_config(raw: dict, base_dir: Path = Path("."), out_override: str | None = None) -> RunConfig:
    """Validate the whole config and build every object before any computation."""
    validate_config(raw)
    try:
        profile = profile_from_config(raw["deformation"])
        bath = bath_from_config(raw["bath"])
        integ = dict(raw["integrator"])
        integrator = IntegratorConfig(
            method=integ.get("method", "rk4_fixed"),
            dt=float(integ["dt"]),
            t_end=float(integ["t_end"]),
            sample_every=int(integ.get("sample_every", 1)),
            adapt_tol=float(integ.get("adapt_tol", 1e-10)),
            guard_threshold=float(integ.get("guard_threshold", 1e-8)),
            pos_tol=float(integ.get("pos_tol", 1e-8)),
            steady_tol=integ.get("steady_tol"),
            snapshots=bool(raw.get("outputs", {}).get("snapshots", False)),
            dt_max=integ.get("dt_max"),
        )
    except (DeformationError, BathError, IntegrationError) as exc:
        raise ConfigError(str(exc)) from exc
    outputs = raw.get("outputs", {})
    out_dir = Path(out_override or outputs.get("dir", "defosc_out"))
    return RunConfig(
        raw=raw,
        profile=profile,
        bath=bath,
        n_trunc=int(raw["n_trunc"]),
        initial_state=raw["initial_state"],
        integrator=integrator,
        out_dir=out_dir,
        snapshots=bool(outputs.get("snapshots", False)),
        dump_liouvillian=bool(outputs.get("dump_liouvillian", False)),
        base_dir=base_dir,
    )


def load_config(path, out_override: str | None = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config(raw, base_dir=path.parent, out_override=out_override)


def build_initial_state(cfg: RunConfig):
    init = cfg.initial_state
    kind = init["kind"]
    if kind == "fock":
        return fock_state(init["n"], cfg.n_trunc)
    if kind == "f_coherent":
        return f_coherent_state(complex(init["alpha_re"], init.get("alpha_im", 0.0)), cfg.profile, cfg.n_trunc)
    if kind == "thermal":
        return thermal_steady_state(cfg.profile, init["beta"], cfg.n_trunc)
    path = Path(init["path"])
    if not path.is_absolute():
        path = cfg.base_dir / path
    rho = load_state(path)
    if rho.n_trunc != cfg.n_trunc:
        raise StateError(f"state file has n_trunc={rho.n_trunc}, config has {cfg.n_trunc}")
    return rho


def _model(cfg: RunConfig):
    spectrum = build_spectrum(cfg.profile, cfg.n_trunc)
    tables = build_coefficients(cfg.bath, spectrum)
    return spectrum, tables, build_stencil(tables)


def write_trajectory_csv(traj, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ObservableRecord.columns())
        for rec in traj.records:
            writer.writerow([repr(float(v)) for v in rec.as_row()])


def _versions() -> dict:
    return {"defosc": __version__, "numpy": np.__version__, "python": platform.python_version()}


def run_evolve(cfg: RunConfig) -> tuple[int, object]:
    """Execute one evolve run and write its outputs. Returns (exit code, trajectory)."""
    spectrum, tables, stencil = _model(cfg)
    rho0 = build_initial_state(cfg)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.dump_liouvillian:
        (cfg.out_dir / "liouvillian.json").write_text(dense_to_json(assemble_dense(tables), cfg.n_trunc))
    traj = evolve(rho0, stencil, spectrum, cfg.integrator)
    write_trajectory_csv(traj, cfg.out_dir / "trajectory.csv")
    save_state(traj.final_state, cfg.out_dir / "final_state.json")
    if cfg.snapshots:
        snaps = [{"t": t, **state_to_dict(s)} for t, s in traj.snapshots]
        (cfg.out_dir / "snapshots.json").write_text(json.dumps(snaps))
    meta = copy.deepcopy(cfg.raw)
    meta["meta"] = {"termination": traj.termination, "steps": traj.steps, "versions": _versions()}
    (cfg.out_dir / "meta.json").write_text(json.dumps(meta, indent=2))
    return EXIT_CODES[traj.termination], traj


MODEL_ERRORS = (ConfigError, DeformationError, BathError, StateError, LiouvillianError, IntegrationError)


def cmd_evolve(config_path, out: str | None = None, dump_liouvillian: bool = False) -> int:
    try:
        cfg = load_config(config_path, out)
        if dump_liouvillian:
            cfg.dump_liouvillian = True
        code, traj = run_evolve(cfg)
    except MODEL_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"{traj.termination}: {len(traj.records)} records written to {cfg.out_dir}")
    return code


def _sup_gap(a, b) -> float:
    return float(np.max(np.abs(np.asarray(getattr(a, "elements", a)) - np.asarray(getattr(b, "elements", b)))))


def cmd_steady(config_path, out: str | None = None) -> int:
    try:
        cfg = load_config(config_path, out)
        spectrum, tables, stencil = _model(cfg)
        states = {}
        if cfg.bath.kind == "thermal":
            states["closed_form"] = steady_state_closed_form(cfg.profile, cfg.bath.beta, cfg.n_trunc)
        else:
            print(f"notice: closed_form skipped (needs a thermal bath, got {cfg.bath.kind})", file=sys.stderr)
        if tables.is_thermal_type:
            states["detailed_balance"] = steady_state_detailed_balance(tables)
        else:
            print("notice: detailed_balance skipped (bath has squeezing correlations)", file=sys.stderr)
        rho0 = build_initial_state(cfg)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            numeric = steady_state_numeric(stencil, spectrum, cfg.integrator, rho0)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        states["numeric"] = numeric.state
    except MODEL_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    payload = {name: state_to_dict(s) for name, s in states.items()}
    payload["populations"] = {
        name: np.asarray(getattr(s, "elements", s)).diagonal().real.tolist() for name, s in states.items()
    }
    payload["numeric_converged"] = numeric.converged
    payload["numeric_residual"] = numeric.residual
    (cfg.out_dir / "steady_state.json").write_text(json.dumps(payload, indent=1))
    names = list(states)
    with open(cfg.out_dir / "comparison.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["backend_a", "backend_b", "sup_norm_gap"])
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                writer.writerow([a, b, repr(_sup_gap(states[a], states[b]))])
    print(f"steady states ({', '.join(names)}) written to {cfg.out_dir}")
    return EXIT_OK


def _set_dotted(raw: dict, path: str, value):
    node = raw
    keys = path.split(".")
    for k in keys[:-1]:
        node = node.get(k) if isinstance(node, dict) else None
    last = keys[-1]
    if not isinstance(node, dict) or last not in node:
        raise ConfigError(f"cannot resolve parameter path {path!r}")
    current = node[last]
    if isinstance(current, bool) or not isinstance(current, (int, float)):
        raise ConfigError(f"parameter path {path!r} is not a numeric scalar field")
    if isinstance(current, int) and float(value).is_integer():
        value = int(value)
    node[last] = value


def _scan_one(raw, path, value, out_dir):
    raw = copy.deepcopy(raw)
    _set_dotted(raw, path, value)
    try:
        cfg = parse_config(raw, out_override=str(out_dir))
        code, traj = run_evolve(cfg)
        last = traj.records[-1]
        return {"value": value, "mean_n": last.mean_n, "min_eig": last.min_eig,
                "termination": traj.termination, "code": code}
    except MODEL_ERRORS as exc:
        return {"value": value, "mean_n": float("nan"), "min_eig": float("nan"),
                "termination": f"error: {exc}", "code": EXIT_USAGE}


def cmd_scan(config_path, param: str, values, out: str | None = None) -> int:
    """Run one evolve per value of ``param``; rows keep the input order."""
    try:
        if not values:
            raise ConfigError("scan needs at least one value")
        cfg = load_config(config_path, out)
        probe = copy.deepcopy(cfg.raw)
        _set_dotted(probe, param, values[0])
    except MODEL_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    root = cfg.out_dir
    root.mkdir(parents=True, exist_ok=True)
    workers = int(os.environ.get("DEFOSC_THREADS", "0") or 0) or min(len(values), os.cpu_count() or 1)
    dirs = [root / f"run_{i:03d}" for i in range(len(values))]
    with ThreadPoolExecutor(max_workers=max(workers, 1)) as pool:
        rows = list(pool.map(lambda a: _scan_one(cfg.raw, param, a[0], a[1]), zip(values, dirs)))
    with open(root / "scan_summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value", "final_mean_n", "final_min_eig", "termination"])
        for row in rows:
            writer.writerow([repr(row["value"]), repr(row["mean_n"]), repr(row["min_eig"]), row["termination"]])
    print(f"scan of {param} over {len(values)} values written to {root}")
    return EXIT_USAGE if any(r["code"] == EXIT_USAGE for r in rows) else EXIT_OK


def _parse_values(text: str) -> list:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            out.append(float(tok))
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {tok!r}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="defosc", description="Damped f-deformed oscillator simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="integrate the master equation")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--dump-liouvillian", action="store_true")

    p = sub.add_parser("steady", help="compute steady states with every applicable backend")
    p.add_argument("--config", required=True)
    p.add_argument("--out")

    p = sub.add_parser("scan", help="repeat evolve over values of one config field")
    p.add_argument("--config", required=True)
    p.add_argument("--param", required=True, help="dotted config path, e.g. bath.beta")
    p.add_argument("--values", required=True, type=_parse_values, help="comma separated list")
    p.add_argument("--out")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "evolve":
        return cmd_evolve(args.config, args.out, args.dump_liouvillian)
    if args.command == "steady":
        return cmd_steady(args.config, args.out)
    return cmd_scan(args.config, args.param, args.values, args.out)


if __name__ == "__main__":
    sys.exit(main())
