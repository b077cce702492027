"""Command-line entry point: demos, resource grids and Wigner data.

Every subcommand accepts ``--config FILE.json``. Values are resolved in the
order built-in defaults, then the config file, then explicit flags. All
parameters are validated before any simulation starts.

Exit codes: 0 success, 2 invalid configuration, 3 a run left its guarantee
window (displacement error of at least half a spacing, truncation leak above
threshold, or a failed fidelity threshold).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (ResourceParams, breakeven_csv, correct_cat_qubit, photon_loss_report,
                     suppress_displacement_error, theorem_bounds)
from .gates import position_operator, wigner
from .hilbert import DensityBlock, RegisterLayout, TruncationLeakError
from .qft import QftPlan, a_prime_rule, verify_qft
from .qsp import Approx, Ideal
from .schemas import validate_file
from .transfer import (GaussianLatticeSpec, gaussian_fock, transfer_demo)

EXIT_OK, EXIT_CONFIG, EXIT_WINDOW = 0, 2, 3

DEFAULTS = {
    "demo-transfer": {
        "n": 2, "m": 2, "delta": 1.0, "squeeze": 1.2, "sigma": None, "cutoff": 80,
        "qsp_mode": "ideal", "qsp_degree": 16, "threshold": 0.995, "output_dir": "out",
        "x_min": -2.0, "x_max": 3.0, "x_points": 101, "p_min": -3.0, "p_max": 3.0,
        "p_points": 121,
    },
    "demo-qft": {
        "n": 2, "m": 2, "a": [1, 2, 3, 4], "a_prime": None, "delta": None, "sigma_ratio": 0.05,
        "cutoff": None, "qsp_mode": "ideal", "qsp_degree": 16, "output_dir": "out",
    },
    "demo-error-correct": {
        "n": 2, "delta": 3.0, "sigma_ratio": 0.05, "delta_errs": [0.0, 0.1, 0.2, 0.3, 0.4],
        "alpha": 2.5, "cat_delta": 0.5, "cutoff": None, "qsp_mode": "ideal", "qsp_degree": 16,
        "output_dir": "out",
    },
    "resources": {
        "n": 8, "m": 2, "a": 3, "a_prime": 6, "delta": 1.0, "sigma": 0.05, "eps_qsp": 1e-3,
        "gamma": 1e-3, "d": [2, 4, 8, 16, 32, 64, 128, 256],
        "eps": [1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4], "output_dir": "out",
    },
    "wigner": {
        "state": "packet", "position": 1.0, "sigma": math.sqrt(0.5), "alpha": 2.5, "cutoff": 80,
        "x_min": -4.0, "x_max": 4.0, "x_points": 81, "p_min": -4.0, "p_max": 4.0,
        "p_points": 81, "output_dir": "out",
    },
}


class ConfigError(ValueError):
    """Invalid configuration; reported with exit code 2."""


# --------------------------------------------------------------------------
# configuration


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hybridcv", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file with parameter values")
        p.add_argument("--output-dir", dest="output_dir")
        return p

    p = common(sub.add_parser("demo-transfer", help="two-mode transfer of a Bell state"))
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--squeeze", type=float, help="squeezing r; sigma = exp(-r)/sqrt(2)")
    p.add_argument("--sigma", type=float, help="packet width (overrides --squeeze)")
    p.add_argument("--cutoff", type=int)
    p.add_argument("--qsp-mode", dest="qsp_mode", choices=["ideal", "approx"])
    p.add_argument("--qsp-degree", dest="qsp_degree", type=int)
    p.add_argument("--threshold", type=float)

    p = common(sub.add_parser("demo-qft", help="qumode QFT against the DFT over an a sweep"))
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--a", type=_int_list, help="comma-separated padding widths")
    p.add_argument("--a-prime", dest="a_prime", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--sigma-ratio", dest="sigma_ratio", type=float)
    p.add_argument("--cutoff", type=int)
    p.add_argument("--qsp-mode", dest="qsp_mode", choices=["ideal", "approx"])
    p.add_argument("--qsp-degree", dest="qsp_degree", type=int)

    p = common(sub.add_parser("demo-error-correct", help="displacement-error suppression"))
    p.add_argument("--n", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--sigma-ratio", dest="sigma_ratio", type=float)
    p.add_argument("--delta-errs", dest="delta_errs", type=_float_list,
                   help="comma-separated errors in units of delta")
    p.add_argument("--alpha", type=float)
    p.add_argument("--cat-delta", dest="cat_delta", type=float)
    p.add_argument("--cutoff", type=int)
    p.add_argument("--qsp-mode", dest="qsp_mode", choices=["ideal", "approx"])
    p.add_argument("--qsp-degree", dest="qsp_degree", type=int)

    p = common(sub.add_parser("resources", help="break-even grid, loss ratios, bound shapes"))
    for key in ("n", "m", "a"):
        p.add_argument(f"--{key}", type=int)
    p.add_argument("--a-prime", dest="a_prime", type=int)
    for key in ("delta", "sigma", "gamma"):
        p.add_argument(f"--{key}", type=float)
    p.add_argument("--eps-qsp", dest="eps_qsp", type=float)
    p.add_argument("--d", type=_float_list, help="comma-separated qudit dimensions")
    p.add_argument("--eps", type=_float_list, help="comma-separated target errors")

    p = common(sub.add_parser("wigner", help="Wigner function of a single-mode state"))
    p.add_argument("--state", choices=["vacuum", "packet", "cat"])
    p.add_argument("--position", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--cutoff", type=int)
    for key in ("x_min", "x_max", "p_min", "p_max"):
        p.add_argument("--" + key.replace("_", "-"), dest=key, type=float)
    for key in ("x_points", "p_points"):
        p.add_argument("--" + key.replace("_", "-"), dest=key, type=int)

    p = sub.add_parser("validate", help="check output files against their schemas")
    p.add_argument("files", nargs="+")
    p.add_argument("--schema", help="schema name when it differs from the file name")
    return ap


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS[command])
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
        cfg.update(loaded)
    for key in cfg:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    validate_config(command, cfg)
    return cfg


def _need(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _positive_int(cfg, key, minimum=1):
    v = cfg[key]
    _need(isinstance(v, int) and v >= minimum, f"{key} must be an integer >= {minimum}, got {v!r}")


def _positive(cfg, key):
    v = cfg[key]
    _need(isinstance(v, (int, float)) and v > 0 and math.isfinite(v),
          f"{key} must be a positive number, got {v!r}")


def _grid_ok(cfg):
    for axis in ("x", "p"):
        _need(cfg[f"{axis}_min"] < cfg[f"{axis}_max"], f"{axis}_min must be below {axis}_max")
        _positive_int(cfg, f"{axis}_points", 2)


def _qsp_ok(cfg):
    _need(cfg["qsp_mode"] in ("ideal", "approx"), "qsp_mode must be 'ideal' or 'approx'")
    if cfg["qsp_mode"] == "approx":
        _positive_int(cfg, "qsp_degree")


def validate_config(command: str, cfg: dict) -> None:
    if command == "demo-transfer":
        _positive_int(cfg, "n")
        _positive_int(cfg, "m")
        _need(cfg["n"] % cfg["m"] == 0, f"m={cfg['m']} must divide n={cfg['n']}")
        _positive(cfg, "delta")
        _positive_int(cfg, "cutoff", 2)
        if cfg["sigma"] is None:
            _need(isinstance(cfg["squeeze"], (int, float)), "squeeze must be a number")
            sigma = math.exp(-cfg["squeeze"]) / math.sqrt(2)
        else:
            _positive(cfg, "sigma")
            sigma = cfg["sigma"]
        _need(sigma < cfg["delta"] / 2, f"packet width {sigma:.4g} must be below delta/2")
        _need(0 < cfg["threshold"] <= 1, "threshold must lie in (0, 1]")
        _qsp_ok(cfg)
        _grid_ok(cfg)
    elif command == "demo-qft":
        _positive_int(cfg, "n")
        _positive_int(cfg, "m")
        _need(cfg["n"] % cfg["m"] == 0, f"m={cfg['m']} must divide n={cfg['n']}")
        _need(isinstance(cfg["a"], list) and cfg["a"] and all(isinstance(v, int) and v >= 1
                                                               for v in cfg["a"]),
              "a must be a nonempty list of integers >= 1")
        _need(0 < cfg["sigma_ratio"] < 0.5, "sigma_ratio must lie in (0, 1/2)")
        if cfg["delta"] is not None:
            _positive(cfg, "delta")
        if cfg["cutoff"] is not None:
            _positive_int(cfg, "cutoff", 2)
        if cfg["a_prime"] is not None:
            _positive_int(cfg, "a_prime")
            need = a_prime_rule(1.0, cfg["sigma_ratio"])
            _need(cfg["a_prime"] >= need, f"a_prime must be at least {need} for this sigma_ratio")
        _qsp_ok(cfg)
    elif command == "demo-error-correct":
        _positive_int(cfg, "n")
        _positive(cfg, "delta")
        _need(0 < cfg["sigma_ratio"] < 0.5, "sigma_ratio must lie in (0, 1/2)")
        _need(isinstance(cfg["delta_errs"], list) and cfg["delta_errs"],
              "delta_errs must be a nonempty list")
        _positive(cfg, "alpha")
        _need(isinstance(cfg["cat_delta"], (int, float)), "cat_delta must be a number")
        if cfg["cutoff"] is not None:
            _positive_int(cfg, "cutoff", 2)
        _qsp_ok(cfg)
    elif command == "resources":
        _positive_int(cfg, "n")
        _positive_int(cfg, "m")
        _need(cfg["n"] % cfg["m"] == 0, f"m={cfg['m']} must divide n={cfg['n']}")
        for key in ("a", "a_prime"):
            _positive_int(cfg, key)
        for key in ("delta", "sigma", "eps_qsp"):
            _positive(cfg, key)
        _need(cfg["gamma"] >= 0, "gamma must be nonnegative")
        _need(cfg["d"] and all(v >= 2 for v in cfg["d"]), "every d must be at least 2")
        _need(cfg["eps"] and all(0 < v for v in cfg["eps"]), "every eps must be positive")
    elif command == "wigner":
        _need(cfg["state"] in ("vacuum", "packet", "cat"), "state must be vacuum, packet or cat")
        _positive(cfg, "sigma")
        _positive(cfg, "alpha")
        _positive_int(cfg, "cutoff", 2)
        _grid_ok(cfg)


def _qsp(cfg):
    return Ideal() if cfg["qsp_mode"] == "ideal" else Approx(cfg["qsp_degree"])


# --------------------------------------------------------------------------
# output helpers


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _grid(cfg):
    x = np.linspace(cfg["x_min"], cfg["x_max"], cfg["x_points"])
    p = np.linspace(cfg["p_min"], cfg["p_max"], cfg["p_points"])
    return x, p


def write_wigner(path: Path, rho, x, p) -> None:
    w = wigner(rho, x, p)
    rows = ((float(xv), float(pv), float(w[i, j])) for i, pv in enumerate(p)
            for j, xv in enumerate(x))
    write_csv(path, ["x", "p", "w"], rows)


def _outdir(cfg) -> Path:
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


# --------------------------------------------------------------------------
# subcommands


def cmd_demo_transfer(cfg: dict) -> int:
    out = _outdir(cfg)
    n, m = cfg["n"], cfg["m"]
    if cfg["sigma"] is None:
        spec = GaussianLatticeSpec.from_squeezing(cfg["delta"], cfg["squeeze"], 2 ** (n // m))
    else:
        spec = GaussianLatticeSpec(cfg["delta"], cfg["sigma"], 2 ** (n // m))
    amps = np.zeros(2**n)
    amps[0] = amps[-1] = 1 / math.sqrt(2)
    demo = transfer_demo(amps, spec, m, cfg["cutoff"], _qsp(cfg))
    if demo.leaked_norm > 1e-6:
        warnings.warn(f"truncation leak {demo.leaked_norm:.2e}; consider a larger cutoff")
    xop = position_operator(cfg["cutoff"])
    x, p = _grid(cfg)
    for level, rho in demo.conditioned.items():
        write_wigner(out / f"wigner_mode{m}_given_x{level}.csv", rho, x, p)
    passed = demo.fidelity >= cfg["threshold"]
    report = {
        "n": n, "m": m, "delta": spec.delta, "sigma": spec.sigma, "squeeze": spec.squeezing,
        "cutoff": cfg["cutoff"], "qsp_mode": cfg["qsp_mode"], "fidelity": demo.fidelity,
        "target_fidelity": 0.9993, "threshold": cfg["threshold"], "passed": passed,
        "leaked_norm": demo.leaked_norm,
        "probabilities": {str(k): v for k, v in demo.probabilities.items()},
        "conditioned_mean_x": {str(k): float(rho.expect(xop).real)
                               for k, rho in demo.conditioned.items()},
    }
    write_json(out / "fidelity.json", report)
    print(f"fidelity {demo.fidelity:.6f} (threshold {cfg['threshold']}), "
          f"leak {demo.leaked_norm:.2e}, files in {out}")
    return EXIT_OK if passed else EXIT_WINDOW


def cmd_demo_qft(cfg: dict) -> int:
    out = _outdir(cfg)
    rows = []
    reports = []
    ordering = None
    for a in sorted(cfg["a"]):
        plan = QftPlan(cfg["n"], cfg["m"], a=a, a_prime=cfg["a_prime"], delta=cfg["delta"],
                       sigma_ratio=cfg["sigma_ratio"], qsp=_qsp(cfg), cutoff=cfg["cutoff"])
        rep = verify_qft(plan)
        bound = theorem_bounds(ResourceParams(plan.n, plan.m, a, plan.padding.a_prime,
                                              plan.spacing, plan.sigma))["qft"]["infidelity"]
        rows.append([a, plan.padding.a_prime, plan.mode_cutoff, rep.infidelity,
                     rep.worst_basis_infidelity, rep.kept_weight, rep.leaked_norm, bound])
        reports.append(json.loads(rep.to_json()))
        ordering = rep.ordering
        print(f"a={a} a'={plan.padding.a_prime} N={plan.mode_cutoff} "
              f"infidelity={rep.infidelity:.5f}", flush=True)
    write_csv(out / "qft_sweep.csv", ["a", "a_prime", "cutoff", "infidelity",
                                      "worst_basis_infidelity", "kept_weight", "leaked_norm",
                                      "bound_shape"], rows)
    infid = [r[3] for r in rows]
    monotone = all(b < a for a, b in zip(infid, infid[1:]))
    plan = QftPlan(cfg["n"], cfg["m"], delta=cfg["delta"], sigma_ratio=cfg["sigma_ratio"])
    write_json(out / "qft_report.json", {
        "n": cfg["n"], "m": cfg["m"], "delta": plan.spacing, "sigma_ratio": cfg["sigma_ratio"],
        "ordering": ordering, "monotone": monotone, "rows": reports})
    return EXIT_OK


def cmd_demo_error_correct(cfg: dict) -> int:
    out = _outdir(cfg)
    delta = cfg["delta"]
    spec = GaussianLatticeSpec(delta, cfg["sigma_ratio"] * delta, 2 ** cfg["n"])
    rows, lattice = [], []
    outside = False
    for frac in cfg["delta_errs"]:
        res = suppress_displacement_error(cfg["n"], spec, frac * delta, mode=_qsp(cfg),
                                          cutoff=cfg["cutoff"])
        outside |= not res.in_guarantee
        for note in res.notes:
            print("warning:", note, file=sys.stderr)
        rows.append([frac * delta, res.fidelity_before, res.fidelity_after, res.in_guarantee])
        lattice.append({"delta_err": frac * delta, "fidelity_before": res.fidelity_before,
                        "fidelity_after": res.fidelity_after, "in_guarantee": res.in_guarantee,
                        "cutoff": res.cutoff, "leaked_norm": res.leaked_norm})
    write_csv(out / "displacement_sweep.csv",
              ["delta_err", "fidelity_before", "fidelity_after", "in_guarantee"], rows)
    cat = correct_cat_qubit(cfg["alpha"], cfg["cat_delta"], mode=_qsp(cfg))
    outside |= not cat.in_guarantee
    write_json(out / "error_correction.json", {
        "n": cfg["n"], "delta": delta, "sigma": spec.sigma, "lattice": lattice,
        "cat": {"alpha": cfg["alpha"], "delta_err": cfg["cat_delta"],
                "fidelity_before": cat.fidelity_before, "fidelity_after": cat.fidelity_after,
                "in_guarantee": cat.in_guarantee, "cutoff": cat.cutoff}})
    for r in rows:
        print(f"delta_err={r[0]:.4g}: {r[1]:.4f} -> {r[2]:.6f}")
    print(f"cat alpha={cfg['alpha']} delta={cfg['cat_delta']}: "
          f"{cat.fidelity_before:.4f} -> {cat.fidelity_after:.6f}")
    return EXIT_WINDOW if outside else EXIT_OK


def cmd_resources(cfg: dict) -> int:
    out = _outdir(cfg)
    (out / "breakeven.csv").write_text(breakeven_csv(cfg["d"], cfg["eps"], cfg["delta"],
                                                     cfg["eps_qsp"]))
    params = ResourceParams(cfg["n"], cfg["m"], cfg["a"], cfg["a_prime"], cfg["delta"],
                            cfg["sigma"], eps_qsp=cfg["eps_qsp"])
    loss = photon_loss_report(cfg["n"], cfg["m"], cfg["gamma"], cfg["delta"], cfg["eps_qsp"])
    write_json(out / "resources.json", {
        "delta": cfg["delta"], "eps_qsp": cfg["eps_qsp"],
        "runtime_constant": cfg["delta"] + math.log2(1 / cfg["eps_qsp"]),
        "photon_loss": loss.as_dict(), "bounds": theorem_bounds(params)})
    print(f"delta + log2(1/eps_qsp) = {cfg['delta'] + math.log2(1 / cfg['eps_qsp']):.4f}")
    return EXIT_OK


def cmd_wigner(cfg: dict) -> int:
    out = _outdir(cfg)
    n = cfg["cutoff"]
    if cfg["state"] == "vacuum":
        vec = np.eye(n)[0]
    elif cfg["state"] == "packet":
        vec = gaussian_fock(cfg["position"], cfg["sigma"], n)
    else:
        a = cfg["alpha"]
        vec = gaussian_fock(a, math.sqrt(0.5), n) + gaussian_fock(-a, math.sqrt(0.5), n)
    vec = vec / np.linalg.norm(vec)
    rho = DensityBlock(RegisterLayout.of(0, [n]), np.outer(vec, vec.conj()))
    x, p = _grid(cfg)
    write_wigner(out / "wigner.csv", rho, x, p)
    return EXIT_OK


def cmd_validate(args) -> int:
    bad = 0
    for f in args.files:
        problems = validate_file(f, args.schema)
        for msg in problems:
            print(msg)
        bad += bool(problems)
        if not problems:
            print(f"{f}: ok")
    return EXIT_CONFIG if bad else EXIT_OK


COMMANDS = {
    "demo-transfer": cmd_demo_transfer,
    "demo-qft": cmd_demo_qft,
    "demo-error-correct": cmd_demo_error_correct,
    "resources": cmd_resources,
    "wigner": cmd_wigner,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        return cmd_validate(args)
    try:
        cfg = resolve_config(args.command, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg)
    except TruncationLeakError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_WINDOW
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
