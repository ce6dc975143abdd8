"""Command-line entry point: ``mrfcd {bound,simulate,sweep,verify,plot}``.

Exit codes: 0 success, 1 a verification suite failed, 2 invalid
configuration, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass, field

from mrfcd.ensembles import (
    GAUSSIAN_SINGLE_EDGE,
    ISING_CLIQUE,
    ISING_SINGLE_EDGE,
    gaussian_single_edge_ensemble,
    ising_clique_ensemble,
    ising_single_edge_ensemble,
)
from mrfcd.errors import ValidationError
from mrfcd.lecam import BoundReport, bound_report
from mrfcd.plot import emit_plot, write_atomic
from mrfcd.risk import reports_from_csv, reports_to_csv, risk_vs_n_sweep, simulate_risk

COMMANDS = ("bound", "simulate", "sweep", "verify", "plot")
BOUND_KINDS = ("ising-easy", "ising-clique", "gaussian")
ENSEMBLE_ALIASES = {
    "ising-easy": ISING_SINGLE_EDGE,
    ISING_SINGLE_EDGE: ISING_SINGLE_EDGE,
    ISING_CLIQUE: ISING_CLIQUE,
    "gaussian": GAUSSIAN_SINGLE_EDGE,
    GAUSSIAN_SINGLE_EDGE: GAUSSIAN_SINGLE_EDGE,
}
EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2, 3


@dataclass
class ExperimentConfig:
    command: str
    kind: str | None = None
    p: int | None = None
    d: int | None = None
    alpha: float | None = None
    beta: float | None = None
    gamma: float | None = None
    lam: float | None = None
    delta: float | None = None
    mode: str = "change-detection"
    n: int | None = None
    n_list: list[int] | None = None
    trials: int | None = None
    seed: int | None = None
    out: str | None = None
    formats: list[str] = field(default_factory=list)
    suites: list[str] = field(default_factory=list)
    inputs: list[str] = field(default_factory=list)
    smoothed_out: str | None = None
    plot: str | None = None
    threads: int | None = None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, obj) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(obj) - names
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    @property
    def ensemble_lambda(self) -> float | None:
        """Explicit lambda, else the preset for the kind (alpha, beta or gamma)."""
        if self.lam is not None:
            return self.lam
        kind = ENSEMBLE_ALIASES.get(self.kind or "")
        return {ISING_SINGLE_EDGE: self.alpha, ISING_CLIQUE: self.beta, GAUSSIAN_SINGLE_EDGE: self.gamma}.get(kind)

    def validate(self) -> None:
        def need(*names):
            missing = [nm for nm in names if getattr(self, nm) is None]
            if missing:
                raise ValidationError(f"{self.command}: missing --{', --'.join(m.replace('_', '-') for m in missing)}")

        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}")
        if self.command == "bound":
            need("kind", "p", "delta")
            if self.kind not in BOUND_KINDS:
                raise ValidationError(f"bound --kind must be one of {BOUND_KINDS}")
            need({"ising-easy": "alpha", "ising-clique": "beta", "gaussian": "gamma"}[self.kind])
            if self.kind == "ising-clique":
                need("d")
        elif self.command in ("simulate", "sweep"):
            need("kind", "p", "trials", "seed")
            if self.kind not in ENSEMBLE_ALIASES:
                raise ValidationError(f"--kind must be one of {sorted(ENSEMBLE_ALIASES)}")
            if self.ensemble_lambda is None:
                raise ValidationError("give --lambda or the kind's preset (--alpha / --beta / --gamma)")
            if ENSEMBLE_ALIASES[self.kind] == ISING_CLIQUE:
                need("d")
            if self.trials < 100:
                raise ValidationError("--trials must be at least 100")
            if self.seed < 0:
                raise ValidationError("--seed must be non-negative")
            if self.command == "simulate":
                need("n")
            else:
                need("n_list")
                if not self.n_list:
                    raise ValidationError("--n-list is empty")
            if any(v < 0 for v in ([self.n] if self.n is not None else []) + (self.n_list or [])):
                raise ValidationError("sample sizes must be non-negative")
        elif self.command == "plot":
            need("out")
            if not self.inputs:
                raise ValidationError("plot needs at least one --input")
        if self.threads is not None and self.threads < 1:
            raise ValidationError("--threads must be positive")


def build_ensemble(cfg: ExperimentConfig):
    kind = ENSEMBLE_ALIASES[cfg.kind]
    lam = cfg.ensemble_lambda
    if kind == ISING_SINGLE_EDGE:
        return ising_single_edge_ensemble(cfg.p, lam)
    if kind == ISING_CLIQUE:
        return ising_clique_ensemble(cfg.p, cfg.d, lam)
    return gaussian_single_edge_ensemble(cfg.p, lam)


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mrfcd", description="Change-detection lower-bound laboratory.")
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(COMMANDS) + "}")

    def common(sp):
        sp.add_argument("--config", help="JSON config file; flags override its values")
        sp.add_argument("--out", help="output path (written atomically); stdout if omitted")
        sp.add_argument("--threads", type=int, help="worker threads (default MRFCD_THREADS or CPU count)")

    def model_flags(sp):
        sp.add_argument("--kind")
        sp.add_argument("--p", type=int)
        sp.add_argument("--d", type=int)
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--beta", type=float)
        sp.add_argument("--gamma", type=float)
        sp.add_argument("--lambda", dest="lam", type=float)

    sp = sub.add_parser("bound", help="evaluate a sample threshold and Le Cam bound")
    common(sp)
    model_flags(sp)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--n", type=int)
    sp.add_argument("--mode", choices=("change-detection", "structure-learning"))
    sp.add_argument("--format", dest="formats", action="append", choices=("json", "csv"))

    for name, helptext in (("simulate", "Monte Carlo risk at one n"), ("sweep", "risk over a list of n")):
        sp = sub.add_parser(name, help=helptext)
        common(sp)
        model_flags(sp)
        sp.add_argument("--trials", type=int)
        sp.add_argument("--seed", type=int)
        if name == "simulate":
            sp.add_argument("--n", type=int)
            sp.add_argument("--format", dest="formats", action="append", choices=("csv", "json"))
        else:
            sp.add_argument("--n-list", dest="n_list", type=_int_list)
            sp.add_argument("--smoothed-out", dest="smoothed_out")
            sp.add_argument("--plot", help="also write an SVG of the sweep here")

    sp = sub.add_parser("verify", help="run verification suites")
    common(sp)
    sp.add_argument("--suite", dest="suites", action="append")

    sp = sub.add_parser("plot", help="SVG from report CSV/JSON files")
    common(sp)
    sp.add_argument("--input", dest="inputs", action="append")
    return parser


def parse_config(argv) -> ExperimentConfig:
    parser = make_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        raise ValidationError("no command given")
    base: dict = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            base = json.load(fh)
    flags = {k: v for k, v in vars(args).items() if k != "config" and v is not None and v != []}
    merged = {**base, **flags}
    cfg = ExperimentConfig.from_dict(merged)
    if cfg.threads is None:
        from mrfcd._rng import default_threads

        cfg.threads = default_threads()
    cfg.validate()
    return cfg


def _emit(cfg: ExperimentConfig, text: str) -> None:
    if cfg.out:
        write_atomic(cfg.out, text)
    else:
        sys.stdout.write(text)


def _bound(cfg: ExperimentConfig) -> int:
    rep = bound_report(cfg.kind, p=cfg.p, delta=cfg.delta, alpha=cfg.alpha, beta=cfg.beta, d=cfg.d,
                       gamma=cfg.gamma, n=cfg.n, mode=cfg.mode)
    if "csv" in cfg.formats:
        cols = ["kind", "p", "d", "alpha", "beta", "gamma", "delta", "mode", "n", "chi2",
                "risk_lower_bound", "risk_lower_bound_raw", "n_threshold"]
        vals = {**rep.params, "kind": rep.kind, "chi2": rep.chi2, "risk_lower_bound": rep.risk_lower_bound,
                "risk_lower_bound_raw": rep.risk_lower_bound_raw, "n_threshold": rep.n_threshold}
        row = ["" if vals[c] is None else (format(vals[c], ".17g") if isinstance(vals[c], float) else str(vals[c]))
               for c in cols]
        _emit(cfg, ",".join(cols) + "\n" + ",".join(row) + "\n")
    else:
        _emit(cfg, rep.to_json() + "\n")
    return EXIT_OK


def _simulate(cfg: ExperimentConfig) -> int:
    e = build_ensemble(cfg)
    rep = simulate_risk(e, cfg.n, cfg.trials, cfg.seed, cfg.threads)
    if "json" in cfg.formats:
        body = dataclasses.asdict(rep)
        _emit(cfg, json.dumps(body, sort_keys=True, default=lambda v: None if v is None else str(v)) + "\n")
    else:
        _emit(cfg, reports_to_csv([rep]))
    return EXIT_OK


def _sweep(cfg: ExperimentConfig) -> int:
    e = build_ensemble(cfg)
    reports, smoothed = risk_vs_n_sweep(e, cfg.n_list, cfg.trials, cfg.seed, cfg.threads)
    _emit(cfg, reports_to_csv(reports))
    if cfg.smoothed_out:
        lines = ["n,risk,risk_smoothed"] + [
            f"{r.n},{format(r.empirical_optimal_risk, '.17g')},{format(s, '.17g')}" for r, s in zip(reports, smoothed)
        ]
        write_atomic(cfg.smoothed_out, "\n".join(lines) + "\n")
    if cfg.plot:
        emit_plot(reports, cfg.plot)
    return EXIT_OK


def _verify(cfg: ExperimentConfig) -> int:
    from mrfcd.verify import SUITES, run_suites

    names = cfg.suites or ["all"]
    if "all" in names:
        names = list(SUITES)
    unknown = [nm for nm in names if nm not in SUITES]
    if unknown:
        raise ValidationError(f"unknown suite(s) {unknown}; choose from {sorted(SUITES)} or 'all'")
    results = run_suites(names)
    lines, failed = [], False
    for name, checks in results.items():
        bad = [c for c in checks if not c.passed]
        failed |= bool(bad)
        lines.append(f"{'PASS' if not bad else 'FAIL'} {name}: {len(checks) - len(bad)}/{len(checks)} checks")
        lines += [f"    failed: {c.name} ({c.detail})" for c in bad]
    _emit(cfg, "\n".join(lines) + "\n")
    return EXIT_FAILED if failed else EXIT_OK


def _load_reports(paths):
    reports = []
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        if path.endswith(".json"):
            obj = json.loads(text)
            for item in obj if isinstance(obj, list) else [obj]:
                reports.append(BoundReport.from_dict(item))
        else:
            reports += reports_from_csv(text)
    return reports


def _plot(cfg: ExperimentConfig) -> int:
    reports = _load_reports(cfg.inputs)
    if not reports:
        raise ValidationError("input files contain no reports")
    emit_plot(reports, cfg.out)
    return EXIT_OK


HANDLERS = {"bound": _bound, "simulate": _simulate, "sweep": _sweep, "verify": _verify, "plot": _plot}


def run(cfg: ExperimentConfig) -> int:
    try:
        cfg.validate()
        return HANDLERS[cfg.command](cfg)
    except ValidationError as exc:
        print(f"mrfcd: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - every other failure is a runtime error
        print(f"mrfcd: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except SystemExit as exc:  # argparse usage errors
        return EXIT_INVALID if exc.code not in (0, None) else EXIT_OK
    except ValidationError as exc:
        print(f"mrfcd: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, json.JSONDecodeError, TypeError) as exc:
        print(f"mrfcd: error: bad config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
