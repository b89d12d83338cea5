"""Command-line pipeline over the toolkit.

One executable, file-based inputs and outputs, reproducible under fixed
seeds.  Exit codes: 0 success, 1 usage error, 2 domain error (with a
machine-readable JSON record on stderr).  All CSV output uses ',' with '.'
decimal points and LF line endings; JSON is emitted with sorted keys so
canonical runs are byte-comparable.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, asdict, fields
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import cantor, consequence, fractal, herbrand, logic, network
from .errors import NsiError


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    program: str = ""
    n: int = 12
    depth: int = 12
    m: int = 12
    level: int = 4
    base: int = 3
    alphabet: str = "0,2"
    d: float = 0.0
    augment: bool = True
    steps: int = 12
    pairs: int = 1000
    hidden: int = 8
    epochs: int = 2000
    lr: float = 0.5
    seed: int = 1
    levels: str = "2,4"
    ref_level: int = 8
    out: str = "out"
    canonical: bool = False

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        cfg = cls()
        text = Path(path).read_text(encoding="utf-8")
        known = {f.name for f in fields(cls)}
        for line_no, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise NsiError(f"{path}:{line_no}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise NsiError(f"{path}:{line_no}: unknown config key {key!r}")
            current = getattr(cfg, key)
            if isinstance(current, bool):
                setattr(cfg, key, value.lower() in ("1", "true", "yes"))
            elif isinstance(current, int):
                setattr(cfg, key, int(value))
            elif isinstance(current, float):
                setattr(cfg, key, float(value))
            else:
                setattr(cfg, key, value)
        return cfg

    def to_text(self) -> str:
        lines = [f"{f.name} = {getattr(self, f.name)}" for f in fields(self)]
        return "\n".join(lines) + "\n"


def _digit_config(args) -> cantor.DigitConfig:
    lo, hi = (int(part) for part in args.alphabet.split(","))
    return cantor.DigitConfig(base=args.base, lo=lo, hi=hi)


# ---------------------------------------------------------------------------
# Serialization helpers
# ---------------------------------------------------------------------------


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _load_program(path: str) -> logic.Program:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise NsiError(f"cannot read program file {path}: {e}") from None
    return logic.parse_program(text)


def _parse_atoms(text: str) -> list:
    atoms = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        prog = logic.parse_program(chunk + ".")
        atoms.append(prog.clauses[0].head)
    return atoms


def _interpretation_from_args(args, config) -> herbrand.Interpretation:
    if getattr(args, "digits", None):
        bits = []
        for ch in args.digits:
            d = int(ch)
            if d == config.lo:
                bits.append(False)
            elif d == config.hi:
                bits.append(True)
            else:
                raise NsiError(
                    f"digit {d} outside alphabet ({config.lo},{config.hi})"
                )
        tail = {"lo": herbrand.TAIL_FALSE, "hi": herbrand.TAIL_TRUE}[args.tail]
        return herbrand.Interpretation.from_prefix(bits, tail)
    if getattr(args, "true", None):
        return herbrand.Interpretation.from_true_atoms(_parse_atoms(args.true))
    return herbrand.Interpretation.empty()


def _trace_json(trace: consequence.TpTrace, lm) -> list:
    rows = []
    n = min(trace.truncation, lm.size)
    for step, entry in enumerate(trace.entries):
        trues = [str(lm.atoms[j]) for j in range(n) if entry.digits[j]]
        changed = (
            sorted(str(a) for a in trace.changed[step - 1]) if step > 0 else []
        )
        rows.append({"step": step, "true_atoms": trues, "changed": changed})
    return rows


def _ifs_json(ifs: fractal.Ifs) -> dict:
    return {
        "base_frame": list(ifs.frame),
        "maps": [
            {"a": float(m.a), "e": float(m.e), "c": float(m.c), "d": float(m.d), "f": float(m.f)}
            for m in ifs.maps
        ],
        "nodes": [[float(x), float(y)] for x, y in ifs.nodes],
        "d_max": float(ifs.d_max),
    }


def _ifs_from_json(data: dict) -> fractal.Ifs:
    maps = tuple(
        fractal.AffineMap(
            Fraction(m["a"]), Fraction(m["e"]), Fraction(m["c"]),
            Fraction(m["d"]), Fraction(m["f"]),
        )
        for m in data["maps"]
    )
    nodes = tuple((Fraction(x), Fraction(y)) for x, y in data["nodes"])
    return fractal.Ifs(maps, nodes, Fraction(data["d_max"]), tuple(data["base_frame"]))


def _net_json(net: network.FeedforwardNet, report: network.TrainReport) -> dict:
    return {
        "arch": {"inputs": 1, "hidden": net.hidden, "outputs": 1},
        "activation": "logistic",
        "weights": {
            "hidden": list(net.w),
            "output": list(net.v),
        },
        "biases": {"hidden": list(net.b), "output": net.b_out},
        "meta": asdict(report),
    }


def _sample_csv(s: fractal.SampleSet) -> str:
    lines = ["x,y,y_radius"]
    for x, y in s.pairs:
        lines.append(
            f"{float(x.exact_value())!r},{float(y.midpoint())!r},{float(y.radius())!r}"
        )
    return "\n".join(lines) + "\n"


def _cloud_csv(cloud: fractal.PointCloud) -> str:
    lines = ["x,y"]
    for x, y in cloud.points:
        lines.append(f"{x!r},{y!r}")
    return "\n".join(lines) + "\n"


def _converge_csv(rows, canonical: bool) -> str:
    lines = ["level,epsilon,runtime_ms"]
    for r in rows:
        ms = "0" if canonical else repr(r.runtime_ms)
        lines.append(f"{r.level},{r.epsilon!r},{ms}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_parse(args) -> int:
    program = _load_program(args.program)
    reparsed = logic.parse_program(str(program))
    assert reparsed == program  # round-trip contract
    print(str(program))
    return 0


def _cmd_ground(args) -> int:
    program = _load_program(args.program)
    g = logic.ground_program(program, args.depth)
    for gi in g:
        print(str(gi.clause))
    return 0


def _cmd_levels(args) -> int:
    program = _load_program(args.program)
    lm = herbrand.enumerate_base(program, args.n)
    out = ["level,atom"]
    out.extend(f"{i + 1},{a}" for i, a in enumerate(lm.atoms))
    print("\n".join(out))
    return 0


def _cmd_tp(args) -> int:
    program = _load_program(args.program)
    config = _digit_config(args)
    lm = herbrand.enumerate_base(program, args.m)
    i0 = _interpretation_from_args(args, config)
    trace = consequence.iterate_tp(program, i0, args.steps, args.m, args.depth, lm=lm)
    print(_dumps(_trace_json(trace, lm)), end="")
    return 0


def _cmd_lipschitz(args) -> int:
    program = _load_program(args.program)
    est = consequence.estimate_lipschitz(
        program, args.pairs, args.seed, args.m, args.depth, _digit_config(args)
    )
    payload = {
        "l_hat": est.l_hat_float,
        "l_hat_rational": str(est.l_hat),
        "pairs": est.pair_count,
        "flip_ratios": [
            {"level": lvl, "ratio": float(r)} for lvl, r in est.flip_ratios
        ],
        "note": est.note,
    }
    if est.max_pair is not None:
        payload["max_pair"] = [
            cantor.format_point(est.max_pair[0]),
            cantor.format_point(est.max_pair[1]),
        ]
    print(_dumps(payload), end="")
    return 0


def _cmd_embed(args) -> int:
    program = _load_program(args.program)
    config = _digit_config(args)
    k = args.k if args.k is not None else (len(args.digits) if args.digits else args.m)
    lm = herbrand.enumerate_base(program, max(k, 1))
    i = _interpretation_from_args(args, config)
    point = cantor.embed(i, lm, k, config)
    lo, hi = point.value_interval()
    real = cantor.to_real(point)
    mid = point.midpoint()
    print(cantor.format_point(point))
    print(f"exact: {mid}" if lo == hi else f"exact interval: [{lo}, {hi}]")
    print(f"decimal: {real.midpoint!r} +/- {real.radius!r}")
    return 0


def _cmd_sample(args) -> int:
    program = _load_program(args.program)
    m = args.m if args.m is not None else args.level + 2
    s = fractal.sample_embedded_tp(
        program, args.level, m, args.depth, _digit_config(args)
    )
    print(_sample_csv(s), end="")
    return 0


def _cmd_ifs(args) -> int:
    program = _load_program(args.program)
    m = args.m if args.m is not None else args.level + 2
    s = fractal.sample_embedded_tp(program, args.level, m, args.depth, _digit_config(args))
    ifs = fractal.build_fif_ifs(s, Fraction(args.d), augment_endpoints=args.augment)
    print(_dumps(_ifs_json(ifs)), end="")
    return 0


def _cmd_attractor(args) -> int:
    data = json.loads(Path(args.ifs).read_text(encoding="utf-8"))
    ifs = _ifs_from_json(data)
    cloud = fractal.attractor_points(ifs, args.mode, args.iters, args.seed)
    print(_cloud_csv(cloud), end="")
    return 0


def _cmd_eval_fif(args) -> int:
    data = json.loads(Path(args.ifs).read_text(encoding="utf-8"))
    ifs = _ifs_from_json(data)
    value = fractal.eval_fif(ifs, args.x, args.eval_depth)
    print(_dumps({"x": args.x, "y": value.y, "bound": value.bound}), end="")
    return 0


def _cmd_converge(args) -> int:
    program = _load_program(args.program)
    levels = [int(part) for part in args.levels.split(",") if part]
    rows = fractal.convergence_report(
        program, levels, args.ref_level, Fraction(args.d), args.m, args.depth,
        _digit_config(args),
    )
    print(_converge_csv(rows, args.canonical), end="")
    return 0


def _cmd_train(args) -> int:
    program = _load_program(args.program)
    m = args.m if args.m is not None else args.level + 2
    s = fractal.sample_embedded_tp(program, args.level, m, args.depth, _digit_config(args))
    net, report = network.train_ffn(s, args.hidden, args.epochs, args.lr, args.seed)
    payload = _net_json(net, report)
    if args.out:
        out = Path(args.out)
        _write(out / "net.json", _dumps(payload))
        _write(out / "train_report.json", _dumps(asdict(report)))
    print(_dumps(asdict(report)), end="")
    return 0


def _cmd_core(args) -> int:
    program = _load_program(args.program)
    net = network.build_core_network(program)
    config = _digit_config(args)
    i0 = _interpretation_from_args(args, config)
    trace = network.run_core_network(net, i0, args.steps)
    payload = {
        "atoms": [str(a) for a in net.atoms],
        "clause_units": len(net.weights),
        "unit_count": net.unit_count,
        "trace": [
            sorted(str(a) for a in trues) for trues in trace.true_sets(net)
        ],
        "fixpoint_reached": trace.fixpoint_reached,
        "cycle_detected": trace.cycle_detected,
    }
    print(_dumps(payload), end="")
    return 0


# ---------------------------------------------------------------------------
# Composite report
# ---------------------------------------------------------------------------


def run_report(cfg: RunConfig) -> dict:
    """Run the full pipeline per config, write per-stage artifacts, and
    return the composite report dictionary."""
    out = Path(cfg.out)
    program = _load_program(cfg.program)
    lo, hi = (int(part) for part in cfg.alphabet.split(","))
    config = cantor.DigitConfig(base=cfg.base, lo=lo, hi=hi)
    clock: dict = {}
    artifacts: dict = {}

    def stage(name: str):
        class _Timer:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                clock[name] = (time.perf_counter() - self.t0) * 1000.0

        return _Timer()

    report: dict = {"config": {f.name: getattr(cfg, f.name) for f in fields(cfg)}}
    report["program"] = str(program)
    report["constant_function"] = all(not c.body for c in program.clauses)
    skipped: dict = {}

    with stage("levels"):
        lm = herbrand.enumerate_base(program, cfg.n)
        levels_csv = "level,atom\n" + "\n".join(
            f"{i + 1},{a}" for i, a in enumerate(lm.atoms)
        ) + "\n"
        _write(out / "levels.csv", levels_csv)
        artifacts["levels"] = "levels.csv"
        report["levels_digest"] = hashlib.sha256(levels_csv.encode()).hexdigest()

    probe = herbrand.enumerate_base(program, max(cfg.level, cfg.ref_level, 1))
    base_size = probe.size

    with stage("acyclicity"):
        ground = logic.ground_program(program, cfg.depth)
        cover = herbrand.enumerate_base_covering(
            program, [gi.clause.head for gi in ground]
            + [lit.atom for gi in ground for lit in gi.clause.body]
        )
        verdict = consequence.check_acyclic(ground, cover)
        report["acyclic"] = verdict.acyclic
        report["acyclic_witness"] = (
            None if verdict.witness is None else str(verdict.witness)
        )
        if not verdict.acyclic:
            report["warning"] = (
                "program is not acyclic under the canonical level mapping; "
                "the Lipschitz hypothesis of the fractal construction is not certified"
            )

    with stage("tp"):
        lm_m = herbrand.enumerate_base(program, cfg.m)
        trace = consequence.iterate_tp(
            program, herbrand.Interpretation.empty(), cfg.steps, cfg.m, cfg.depth,
            lm=lm_m,
        )
        _write(out / "trace.json", _dumps(_trace_json(trace, lm_m)))
        artifacts["trace"] = "trace.json"
        report["fixpoint_reached"] = trace.fixpoint_reached

    with stage("lipschitz"):
        est = consequence.estimate_lipschitz(
            program, cfg.pairs, cfg.seed, cfg.m, cfg.depth, config
        )
        lip = {
            "l_hat": est.l_hat_float,
            "l_hat_rational": str(est.l_hat),
            "pairs": est.pair_count,
            "flip_ratios": [
                {"level": lvl, "ratio": float(r)} for lvl, r in est.flip_ratios
            ],
            "note": est.note,
        }
        _write(out / "lipschitz.json", _dumps(lip))
        artifacts["lipschitz"] = "lipschitz.json"
        report["l_hat"] = est.l_hat_float

    samples = None
    if base_size >= cfg.level:
        with stage("sample"):
            samples = fractal.sample_embedded_tp(
                program, cfg.level, max(cfg.m, cfg.level + 2), cfg.depth, config
            )
            _write(out / "samples.csv", _sample_csv(samples))
            artifacts["samples"] = "samples.csv"

        with stage("ifs"):
            ifs = fractal.build_fif_ifs(
                samples, Fraction(cfg.d), augment_endpoints=cfg.augment
            )
            _write(out / "ifs.json", _dumps(_ifs_json(ifs)))
            artifacts["ifs"] = "ifs.json"

        with stage("attractor"):
            cloud = fractal.attractor_points(ifs, "chaos", 2000, cfg.seed)
            _write(out / "attractor.csv", _cloud_csv(cloud))
            artifacts["attractor"] = "attractor.csv"
    else:
        skipped["sample"] = f"base has {base_size} atoms, level {cfg.level} needs more"

    if base_size >= cfg.ref_level:
        with stage("converge"):
            levels = [int(part) for part in cfg.levels.split(",") if part]
            rows = fractal.convergence_report(
                program, levels, cfg.ref_level, Fraction(cfg.d),
                max(cfg.m, cfg.ref_level + 2), cfg.depth, config,
            )
            _write(out / "converge.csv", _converge_csv(rows, cfg.canonical))
            artifacts["converge"] = "converge.csv"
            report["convergence"] = [
                {"level": r.level, "epsilon": r.epsilon} for r in rows
            ]
    else:
        skipped["converge"] = (
            f"base has {base_size} atoms, reference level {cfg.ref_level} needs more"
        )

    if samples is not None and len(samples) >= 2:
        with stage("train"):
            net, train_report = network.train_ffn(
                samples, cfg.hidden, cfg.epochs, cfg.lr, cfg.seed
            )
            _write(out / "net.json", _dumps(_net_json(net, train_report)))
            _write(out / "train_report.json", _dumps(asdict(train_report)))
            artifacts["net"] = "net.json"
            artifacts["train_report"] = "train_report.json"
            report["training"] = asdict(train_report)
    else:
        skipped["train"] = "needs at least 2 operator samples"

    if skipped:
        report["skipped_stages"] = skipped
    report["artifacts"] = artifacts
    if not cfg.canonical:
        report["stage_wall_clock_ms"] = clock
    _write(out / "report.json", _dumps(report))
    return report


def _cmd_report(args) -> int:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    for name in (
        "program n depth m level base alphabet d steps pairs hidden epochs lr "
        "seed levels ref_level out".split()
    ):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if args.canonical:
        cfg.canonical = True
    if not cfg.program:
        raise _UsageError("report needs a program file (argument or config)")
    report = run_report(cfg)
    print(_dumps(report), end="")
    return 0


# ---------------------------------------------------------------------------
# Argument wiring
# ---------------------------------------------------------------------------


def _add_common(sp, *names, m_default: Optional[int] = 12):
    if "depth" in names:
        sp.add_argument("--depth", type=int, default=12)
    if "m" in names:
        sp.add_argument("--m", type=int, default=m_default)
    if "base" in names:
        sp.add_argument("--base", type=int, default=3)
        sp.add_argument("--alphabet", default="0,2")
    if "seed" in names:
        sp.add_argument("--seed", type=int, default=1)


def build_parser() -> _Parser:
    parser = _Parser(prog="nsi", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse and reserialize a program")
    p.add_argument("program")
    p.set_defaults(func=_cmd_parse)

    p = sub.add_parser("ground", help="depth-bounded ground instances")
    p.add_argument("program")
    _add_common(p, "depth")
    p.set_defaults(func=_cmd_ground)

    p = sub.add_parser("levels", help="canonical level mapping as CSV")
    p.add_argument("program")
    p.add_argument("-n", type=int, default=12)
    p.set_defaults(func=_cmd_levels)

    p = sub.add_parser("tp", help="iterate the consequence operator")
    p.add_argument("program")
    p.add_argument("--steps", type=int, default=12)
    p.add_argument("--true", help="starting true atoms, ';'-separated")
    p.add_argument("--digits", help="starting truth prefix as digits")
    p.add_argument("--tail", choices=["lo", "hi"], default="lo")
    _add_common(p, "depth", "m", "base")
    p.set_defaults(func=_cmd_tp)

    p = sub.add_parser("lipschitz", help="empirical Lipschitz lower bound")
    p.add_argument("program")
    p.add_argument("--pairs", type=int, default=1000)
    _add_common(p, "depth", "m", "base", "seed")
    p.set_defaults(func=_cmd_lipschitz)

    p = sub.add_parser("embed", help="embed an interpretation")
    p.add_argument("program")
    p.add_argument("--true", help="true atoms, ';'-separated")
    p.add_argument("--digits", help="explicit digit prefix")
    p.add_argument("--tail", choices=["lo", "hi"], default="lo")
    p.add_argument("-k", type=int, default=None, help="prefix length")
    _add_common(p, "m", "base")
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("sample", help="sample the embedded operator")
    p.add_argument("program")
    p.add_argument("--level", type=int, required=True)
    _add_common(p, "depth", "base")
    p.add_argument("--m", type=int, default=None)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("ifs", help="fractal-interpolation IFS as JSON")
    p.add_argument("program")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--d", type=float, default=0.0)
    p.add_argument("--augment", action=argparse.BooleanOptionalAction, default=True)
    _add_common(p, "depth", "base")
    p.add_argument("--m", type=int, default=None)
    p.set_defaults(func=_cmd_ifs)

    p = sub.add_parser("attractor", help="attractor point cloud as CSV")
    p.add_argument("--ifs", required=True, help="IFS JSON file")
    p.add_argument("--mode", choices=["chaos", "deterministic"], default="chaos")
    p.add_argument("--iters", type=int, default=10000)
    _add_common(p, "seed")
    p.set_defaults(func=_cmd_attractor)

    p = sub.add_parser("eval-fif", help="evaluate an interpolation function")
    p.add_argument("--ifs", required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--eval-depth", type=int, default=32)
    p.set_defaults(func=_cmd_eval_fif)

    p = sub.add_parser("converge", help="uniform-convergence report as CSV")
    p.add_argument("program")
    p.add_argument("--levels", default="2,4,6")
    p.add_argument("--ref-level", dest="ref_level", type=int, default=10)
    p.add_argument("--d", type=float, default=0.0)
    p.add_argument("--canonical", action="store_true")
    _add_common(p, "depth", "m", "base")
    p.set_defaults(func=_cmd_converge)

    p = sub.add_parser("train", help="train the feedforward approximator")
    p.add_argument("program")
    p.add_argument("--level", type=int, default=8)
    p.add_argument("--hidden", type=int, default=8)
    p.add_argument("--epochs", type=int, default=20000)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--out")
    _add_common(p, "depth", "base", "seed")
    p.add_argument("--m", type=int, default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("core", help="propositional threshold network")
    p.add_argument("program")
    p.add_argument("--steps", type=int, default=12)
    p.add_argument("--true", help="starting true atoms, ';'-separated")
    p.add_argument("--digits")
    p.add_argument("--tail", choices=["lo", "hi"], default="lo")
    _add_common(p, "base")
    p.set_defaults(func=_cmd_core)

    p = sub.add_parser("report", help="full pipeline with artifact directory")
    p.add_argument("program", nargs="?")
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--canonical", action="store_true")
    p.add_argument("--n", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--level", type=int)
    p.add_argument("--base", type=int)
    p.add_argument("--alphabet")
    p.add_argument("--d", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--pairs", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--levels")
    p.add_argument("--ref-level", dest="ref_level", type=int)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except NsiError as e:
        print(json.dumps(e.payload(), sort_keys=True), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
