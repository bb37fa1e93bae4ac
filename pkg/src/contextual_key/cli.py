"""Command-line entry point: ``contextual-key <command> [options]``.

Every command prints JSON on stdout (or a plain table with ``--pretty``) and
writes a run manifest, to ``--manifest PATH`` or as one JSON line on stderr.
Exit codes: 0 success, 1 computation failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from . import adversary, bellfunc, boxmodel, npa, protocol, quantumsim, security

SEED_ENV = "CONTEXTUAL_KEY_SEED"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ComputationError(RuntimeError):
    pass


@dataclass
class RunManifest:
    command: str
    parameters: dict
    version: str = __version__
    seed: int | None = None
    outputs: list = field(default_factory=list)
    wall_time: float = 0.0

    def add_output(self, path: str | Path) -> None:
        data = Path(path).read_bytes()
        self.outputs.append({"path": str(path), "sha256": hashlib.sha256(data).hexdigest()})

    def verify(self) -> bool:
        return all(
            hashlib.sha256(Path(o["path"]).read_bytes()).hexdigest() == o["sha256"] for o in self.outputs
        )

    def to_json(self) -> dict:
        return asdict(self)


def load_expectations() -> dict:
    text = resources.files("contextual_key").joinpath("data/expectations.json").read_text()
    return json.loads(text)


# argument types; argparse turns ArgumentTypeError into exit 2 naming the flag


def _ranged(lo=None, hi=None, kind=float):
    def parse(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a valid {kind.__name__}: {text!r}")
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            raise argparse.ArgumentTypeError(f"{v} outside [{lo}, {hi}]")
        return v

    return parse


def _default_seed() -> int:
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise SystemExit(f"{SEED_ENV} must be an integer, got {env!r}")


def _json_arg(text: str):
    p = Path(text)
    if p.exists():
        return json.loads(p.read_text())
    return json.loads(text)


def _write(path, text: str, manifest: RunManifest) -> None:
    Path(path).write_text(text)
    manifest.add_output(path)


# commands: each returns (payload, ok)


def cmd_validate(args, m):
    box = boxmodel.BoxFamily.load(args.box)
    rep = boxmodel.validate(box, tol=args.tol, ab_tol=args.ab_tol)
    out = {
        "ks_violation": rep.ks_violation,
        "ns_violation": rep.ns_violation,
        "ab_errors": np.asarray(rep.ab_errors).tolist(),
        "passed": rep.passed,
        "ok": rep.ok,
    }
    return out, rep.ok


def cmd_simulate(args, m):
    box = quantumsim.quantum_pm_box(quantumsim.NoiseModel(args.werner_p, args.noise_kind))
    if args.out:
        _write(args.out, json.dumps(box.to_json()), m)
    rep = boxmodel.validate(box)
    out = {
        "werner_p": args.werner_p,
        "noise_kind": args.noise_kind,
        "ab_errors": rep.ab_errors.tolist(),
        "ks_violation": rep.ks_violation,
        "ns_violation": rep.ns_violation,
        "out": args.out,
    }
    if not args.out:
        out["box"] = box.to_json()
    return out, True


def cmd_bell(args, m):
    f = args.functional
    out = {"functional": f}
    if f == "chsh":
        out.update(classical_bound=2.0, quantum_bound=2 * np.sqrt(2), algebraic_bound=4.0)
        out["classical_enumeration"] = bellfunc.classical_max_chsh()
        out["quantum_demo"] = quantumsim.chsh_demo()
    else:
        value, strategy = bellfunc.classical_max_gamma()
        scale = (lambda g: g) if f == "gamma" else bellfunc.beta_from_gamma
        out.update(
            classical_bound=scale(4.0),
            algebraic_bound=scale(6.0),
            quantum_bound_reference=scale(load_expectations()["reference_gamma0"]),
            classical_enumeration=scale(value),
            classical_strategy=[list(s) for s in strategy],
        )
    if args.table is not None:
        t = _json_arg(args.table)
        if f == "gamma":
            v = bellfunc.gamma(t)
        elif f == "beta":
            v = bellfunc.beta(t)
        else:
            v = bellfunc.chsh(*np.asarray(t, float).ravel())
        out["value"] = v
        out["exceeds_classical"] = bool(v > out["classical_bound"] + 1e-12)
        out["within_algebraic"] = bool(v <= out["algebraic_bound"] + 1e-12)
    return out, True


def _npa_bound(level: int, tol: float, dump=None, manifest=None, chsh=False):
    prob = npa.chsh_problem(level) if chsh else npa.build_problem(level)
    if dump:
        prob.dump(dump)
        if manifest is not None:
            manifest.add_output(dump)
    t0 = time.perf_counter()
    res = npa.solve_bound(prob, tol=tol)
    return prob, res, time.perf_counter() - t0


def cmd_npa(args, m):
    prob, res, dt = _npa_bound(args.level, args.tol, args.dump_problem, m, args.chsh)
    out = {
        "level": args.level,
        "functional": "chsh" if args.chsh else "gamma",
        "size": prob.size,
        "bound": res.dual_value,
        "primal_value": res.primal_value,
        "gap": res.gap,
        "status": res.status,
        "iterations": res.iterations,
        "solve_seconds": round(dt, 3),
    }
    return out, res.solved


def cmd_keyrate(args, m):
    rep = security.key_rate(args.eps, args.gamma0, args.delta_ratio)
    return rep.to_json(), True


def cmd_threshold(args, m):
    out = {
        "gamma0": args.gamma0,
        "threshold": security.threshold(args.gamma0),
        "threshold_fixed_delta": security.threshold(args.gamma0, delta_ratio=1.8),
        "delta_ratio_fixed": 1.8,
    }
    return out, True


def cmd_attack(args, m):
    if args.target:
        target = boxmodel.BoxFamily.load(args.target)
    else:
        target = quantumsim.quantum_pm_box()
    cap = None if args.no_cap else args.gamma0
    ens = adversary.attack_search(
        target, members=args.members, restarts=args.restarts, seed=args.seed, steps=args.steps, cap_gamma0=cap
    )
    rep = adversary.eve_entropy(ens, gamma0=args.gamma0)
    ok = adversary.verify_decomposition(ens, target, 1e-8)
    if args.out:
        _write(args.out, json.dumps(ens.to_json()), m)
    out = {
        "report": rep.to_json(),
        "weights": ens.weights.tolist(),
        "verified": ok,
        "cap_gamma0": cap,
        "out": args.out,
    }
    if not args.out:
        out["ensemble"] = ens.to_json()
    return out, ok


def cmd_protocol(args, m):
    cfg = protocol.ProtocolConfig(
        n=args.n,
        test_fraction1=args.test_fraction1,
        test_fraction2=args.test_fraction2,
        noise=quantumsim.NoiseModel(args.werner_p, args.noise_kind),
        abort_eps=args.abort_eps,
        seed=args.seed,
        gamma0=args.gamma0,
    )
    res = protocol.run(cfg)
    if args.out:
        _write(args.out, res.transcript.to_csv(), m)
    out = res.summary()
    out["out"] = args.out
    return out, True


def _row(exp: dict, key: str, computed: float) -> dict:
    e = exp[key]
    ok = abs(computed - e["expected"]) <= e["tol"] + 1e-12
    return {"name": key, "label": e["label"], "computed": computed, "expected": e["expected"], "tol": e["tol"], "pass": bool(ok)}


def reproduce(gamma0_override: float | None = None, seed: int = 0) -> dict:
    """Recompute every headline number and compare to the expectations file."""
    exp = load_expectations()
    _, r1, _ = _npa_bound(1, 1e-8)
    _, r2, _ = _npa_bound(2, 1e-8)
    computed_g0 = float(r2.dual_value)
    classical, _ = bellfunc.classical_max_gamma()
    # security numbers use the reference gamma0 unless overridden
    g_sec = exp["reference_gamma0"] if gamma0_override is None else gamma0_override
    g_cap = computed_g0 if gamma0_override is None else gamma0_override
    x = security.row_cap(g_cap)
    k0 = security.key_rate(0.0, g_sec).key_rate
    th = security.threshold(g_sec)
    th_fixed = security.threshold(g_sec, delta_ratio=1.8)
    run = protocol.run(protocol.ProtocolConfig(n=10_000, seed=seed, gamma0=g_sec))
    tr = run.transcript
    rows = [
        _row(exp, "npa_level1", float(r1.dual_value)),
        _row(exp, "npa_level2", computed_g0),
        _row(exp, "classical", float(classical)),
        _row(exp, "row_cap", x),
        _row(exp, "key_rate_ideal", k0),
        _row(exp, "threshold", th),
        _row(exp, "threshold_fixed_delta", th_fixed),
        _row(exp, "protocol_key_rate", run.key_rate_estimate),
    ]
    smoke = bool(np.array_equal(tr.alice_key, tr.bob_key) and not tr.aborted and tr.estimate.mean_eps == 0.0)
    rows.append({"name": "protocol_smoke", "label": "noiseless run: equal keys, no abort", "computed": smoke,
                 "expected": True, "tol": 0.0, "pass": smoke})
    info = {
        "gamma0_computed": computed_g0,
        "gamma0_security": g_sec,
        "solver_status": [r1.status, r2.status],
        "key_rate_ideal_at_computed_gamma0": security.key_rate(0.0, min(max(computed_g0, 4.0), 6.0)).key_rate,
        "threshold_at_computed_gamma0": security.threshold(min(max(computed_g0, 4.0), 6.0)),
    }
    return {"rows": rows, "info": info, "all_pass": all(r["pass"] for r in rows), "seed": seed}


def cmd_reproduce(args, m):
    rep = reproduce(args.gamma0_override, args.seed)
    if args.out:
        _write(args.out, json.dumps(rep, indent=1, sort_keys=True) + "\n", m)
    return rep, rep["all_pass"]


# output


def _pretty(payload: dict) -> str:
    if "rows" in payload:
        lines = [f"{'quantity':40s} {'computed':>14s} {'expected':>10s} {'tol':>8s}  result"]
        for r in payload["rows"]:
            c = r["computed"]
            cs = f"{c:.6f}" if isinstance(c, float) else str(c)
            lines.append(f"{r['label']:40s} {cs:>14s} {str(r['expected']):>10s} {r['tol']:>8g}  {'PASS' if r['pass'] else 'FAIL'}")
        for k, v in payload["info"].items():
            lines.append(f"  {k}: {v}")
        return "\n".join(lines)
    return "\n".join(f"{k:24s} {v}" for k, v in payload.items() if k not in ("box", "ensemble"))


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def build_parser() -> argparse.ArgumentParser:
    seed = _default_seed()
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pretty", action="store_true", help="human-readable table instead of JSON")
    common.add_argument("--manifest", help="write the run manifest here instead of stderr")
    g0 = _ranged(4.0, 6.0)
    ref_g0 = security.REFERENCE_GAMMA0

    p = argparse.ArgumentParser(prog="contextual-key", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="check a box JSON file")
    s.add_argument("--box", required=True)
    s.add_argument("--tol", type=_ranged(0.0), default=1e-9)
    s.add_argument("--ab-tol", type=_ranged(0.0), default=None)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("simulate", parents=[common], help="exact quantum PM box")
    s.add_argument("--werner-p", type=_ranged(0.0, 1.0), default=1.0)
    s.add_argument("--noise-kind", choices=("global", "pair"), default="global")
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("bell", parents=[common], help="evaluate a Bell functional")
    s.add_argument("--functional", choices=("gamma", "beta", "chsh"), default="gamma")
    s.add_argument("--table", help="inline JSON or path to a JSON file")
    s.set_defaults(func=cmd_bell)

    s = sub.add_parser("npa", parents=[common], help="NPA upper bound on gamma")
    s.add_argument("--level", type=int, choices=(1, 2), default=1)
    s.add_argument("--tol", type=_ranged(1e-12, 1e-2), default=1e-7)
    s.add_argument("--dump-problem")
    s.add_argument("--chsh", action="store_true", help="bound CHSH instead of gamma")
    s.set_defaults(func=cmd_npa)

    s = sub.add_parser("keyrate", parents=[common], help="key rate at a given error")
    s.add_argument("--eps", type=_ranged(0.0, 2.0 / 3.0), required=True)
    s.add_argument("--gamma0", type=g0, default=ref_g0)
    s.add_argument("--delta-ratio", type=_ranged(1e-9), default=None)
    s.set_defaults(func=cmd_keyrate)

    s = sub.add_parser("threshold", parents=[common], help="largest tolerable error")
    s.add_argument("--gamma0", type=g0, default=ref_g0)
    s.set_defaults(func=cmd_threshold)

    s = sub.add_parser("attack", parents=[common], help="heuristic ensemble attack")
    s.add_argument("--target", help="box JSON; default is the ideal quantum box")
    s.add_argument("--members", type=_ranged(1, kind=int), default=2)
    s.add_argument("--restarts", type=_ranged(1, kind=int), default=10)
    s.add_argument("--steps", type=_ranged(0, kind=int), default=1000)
    s.add_argument("--seed", type=int, default=seed)
    s.add_argument("--gamma0", type=g0, default=ref_g0)
    s.add_argument("--no-cap", action="store_true", help="drop the quantum row cap")
    s.add_argument("--out")
    s.set_defaults(func=cmd_attack)

    s = sub.add_parser("protocol", parents=[common], help="Monte-Carlo protocol run")
    s.add_argument("--n", type=_ranged(100, kind=int), default=10_000)
    s.add_argument("--werner-p", type=_ranged(0.0, 1.0), default=1.0)
    s.add_argument("--noise-kind", choices=("global", "pair"), default="global")
    s.add_argument("--test-fraction1", type=_ranged(0.0, 1.0), default=0.25)
    s.add_argument("--test-fraction2", type=_ranged(0.0, 1.0), default=0.25)
    s.add_argument("--abort-eps", type=_ranged(0.0), default=0.0068)
    s.add_argument("--seed", type=int, default=seed)
    s.add_argument("--gamma0", type=g0, default=ref_g0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_protocol)

    s = sub.add_parser("reproduce", parents=[common], help="recompute every headline number")
    s.add_argument("--gamma0-override", type=g0, default=None)
    s.add_argument("--seed", type=int, default=seed)
    s.add_argument("--out")
    s.set_defaults(func=cmd_reproduce)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    params = {k: v for k, v in vars(args).items() if k not in ("func", "pretty", "manifest")}
    manifest = RunManifest(args.command, params, seed=getattr(args, "seed", None))
    t0 = time.perf_counter()
    try:
        payload, ok = args.func(args, manifest)
    except (boxmodel.BoxError, ValueError) as e:
        # bad inputs discovered after parsing (file contents, config ranges)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ComputationError, np.linalg.LinAlgError, ArithmeticError) as e:
        print(f"computation failed: {e}", file=sys.stderr)
        return EXIT_FAIL
    manifest.wall_time = time.perf_counter() - t0
    text = _pretty(payload) if args.pretty else json.dumps(payload, sort_keys=True, default=_default)
    print(text)
    mtext = json.dumps(manifest.to_json(), sort_keys=True, default=_default)
    if args.manifest:
        Path(args.manifest).write_text(mtext + "\n")
    else:
        print(mtext, file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
