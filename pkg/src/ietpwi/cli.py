"""Command-line pipeline: induct, accelerate, analyze, sample, build, verify.

Every command accepts ``--config FILE`` (JSON) with individual flags taking
precedence, honors ``--seed`` for bit-reproducible output and ``--json``
for machine-readable results.  ``IETPWI_THREADS`` caps worker parallelism
for any internally parallel stage (the current pipeline is sequential, so
the value is validated and recorded but does not change results).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from math import tau
from typing import Optional, Sequence

from . import breaking, catalog, pwi as pwi_mod, rauzy, spectral, verify
from .errors import IetPwiError
from .iet import IETState, Lengths, Permutation, build_iet


def max_threads() -> int:
    """Parallelism cap from the environment; at least 1."""
    try:
        return max(1, int(os.environ.get("IETPWI_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class RunConfig:
    """Everything needed to reproduce a run."""

    perm: str = "4 3 2 1"
    lengths: list = field(default_factory=lambda: [0.43, 0.34, 0.12, 0.11])
    theta: Optional[list] = None
    levels: int = 12
    zorich_steps: int = 1000
    delta: float = 0.5
    seed: int = 0
    deep_levels: Optional[int] = None
    out: Optional[str] = None
    json_output: bool = False
    use_catalog: bool = False

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        cfg = cls()
        if getattr(args, "config", None):
            with open(args.config, "r", encoding="utf-8") as handle:
                for key, value in json.load(handle).items():
                    if hasattr(cfg, key):
                        setattr(cfg, key, value)
        for key in ("perm", "levels", "zorich_steps", "delta", "seed",
                    "deep_levels", "out", "use_catalog"):
            value = getattr(args, key, None)
            if value is not None:
                setattr(cfg, key, value)
        if getattr(args, "lengths", None):
            cfg.lengths = [part for part in args.lengths.split(",")]
        if getattr(args, "theta", None):
            cfg.theta = [float(p) for p in args.theta.split(",")]
        if getattr(args, "json_output", False):
            cfg.json_output = True
        return cfg

    def build(self) -> IETState:
        if self.use_catalog:
            return catalog.symmetric4_self_inducing().iet
        return build_iet(Permutation.from_json(self.perm),
                         Lengths.from_values(self.lengths))


def _emit(cfg: RunConfig, text: str, payload: Optional[dict] = None) -> None:
    if cfg.json_output and payload is not None:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text)


def _write(path: Optional[str], default_name: str, content: str) -> str:
    target = path or default_name
    with open(target, "w", encoding="utf-8") as handle:
        handle.write(content)
    return target


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_induct(cfg: RunConfig) -> int:
    iet = cfg.build()
    trace = rauzy.rauzy_iterate(iet, cfg.levels)
    import io

    buf = io.StringIO()
    trace.to_jsonl(buf)
    if cfg.out:
        _write(cfg.out, "trace.jsonl", buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    if trace.error is not None:
        print(f"stopped early after {trace.n_steps} steps: {trace.error}",
              file=sys.stderr)
        return 1
    return 0


def cmd_zorich(cfg: RunConfig) -> int:
    iet = cfg.build()
    trace = rauzy.zorich_iterate(iet, cfg.levels)
    payload = {
        "blocks": trace.zorich_lengths,
        "acceleration_partial_sums": trace.acceleration_partial_sums(),
        "steps": trace.n_steps,
        "error": trace.error,
    }
    _emit(cfg, json.dumps(payload, sort_keys=True), payload)
    return 0 if trace.error is None else 1


def cmd_rauzy_graph(cfg: RunConfig) -> int:
    graph = rauzy.rauzy_class(Permutation.from_json(cfg.perm))
    dot = graph.to_dot()
    if cfg.out:
        target = _write(cfg.out, "rauzy.dot", dot)
        _emit(cfg, f"wrote {target} ({graph.size} vertices)",
              {"vertices": graph.size, "path": target})
    else:
        print(dot)
    return 0


def cmd_lyapunov(cfg: RunConfig) -> int:
    iet = cfg.build()
    estimate = spectral.lyapunov_spectrum(iet, cfg.zorich_steps)
    payload = {
        "exponents": [float(v) for v in estimate.exponents],
        "errors": [float(v) for v in estimate.errors],
        "steps": estimate.steps_used,
        "symmetric_defects": [float(v) for v in estimate.symmetric_defects()],
    }
    _emit(cfg, json.dumps(payload, sort_keys=True), payload)
    return 0


def _stable_frame(cfg: RunConfig, iet: IETState, trace: rauzy.InductionTrace):
    if cfg.use_catalog:
        return catalog.symmetric4_self_inducing().stable_frame_exact()
    return spectral.stable_subspace(iet, max(40, cfg.zorich_steps)).frame


def cmd_sample_theta(cfg: RunConfig) -> int:
    iet = cfg.build()
    trace = rauzy.rauzy_iterate(iet, max(cfg.levels, 40))
    frame = _stable_frame(cfg, iet, trace)
    sample = spectral.sample_theta(frame, cfg.delta, cfg.seed,
                                   upsilon=iet.upsilon, trace=trace)
    payload = {
        "theta": [float(t) for t in sample.theta],
        "delta": sample.delta,
        "attempts": sample.attempts,
        "exclusions": sample.exclusion_report,
        "seed": cfg.seed,
    }
    _emit(cfg, json.dumps(payload, sort_keys=True), payload)
    return 0


def _resolve_theta(cfg: RunConfig, iet: IETState, trace: rauzy.InductionTrace):
    """Rotation vector from config, or sampled with the halving policy.

    Starting at the configured radius, the radius is halved until the deep
    curve of the sampled vector passes the exact injectivity test.
    """
    if cfg.theta is not None:
        return list(cfg.theta), {"source": "config"}
    frame = _stable_frame(cfg, iet, trace)
    delta = cfg.delta
    depth = cfg.deep_levels or max(cfg.levels, 25)
    for _ in range(10):
        sample = spectral.sample_theta(frame, delta, cfg.seed,
                                       upsilon=iet.upsilon, trace=trace)
        curves = breaking.breaking_sequence(trace, sample.v, depth)
        injective, witness = verify.injectivity(curves[-1])
        if injective:
            return sample.v, {"source": "sampled", "delta": delta,
                              "attempts": sample.attempts}
        delta /= 2.0
    raise IetPwiError("no injective sample found by the halving policy")


def cmd_curve(cfg: RunConfig) -> int:
    iet = cfg.build()
    depth = cfg.levels
    trace = rauzy.rauzy_iterate(iet, max(depth, 40))
    theta, origin = _resolve_theta(cfg, iet, trace)
    curves = breaking.breaking_sequence(trace, theta, depth)
    base = cfg.out or "curve"
    svg_path = _write(None, f"{base}_level{depth}.svg", curves[-1].to_svg())
    csv_path = _write(None, f"{base}_level{depth}.csv", curves[-1].to_csv())
    payload = {"svg": svg_path, "csv": csv_path, "segments": curves[-1].n_segments,
               "theta_source": origin}
    _emit(cfg, f"wrote {svg_path} and {csv_path} ({curves[-1].n_segments} segments)",
          payload)
    return 0


def cmd_pwi(cfg: RunConfig) -> int:
    iet = cfg.build()
    depth = cfg.deep_levels or max(cfg.levels, 25)
    trace = rauzy.rauzy_iterate(iet, max(depth, 40))
    theta, origin = _resolve_theta(cfg, iet, trace)
    curves = breaking.breaking_sequence(trace, theta, depth)
    theta_float = [float(t) % tau for t in theta]
    adapted = pwi_mod.adapted_pwi(curves[-1], iet, theta_float)
    start = complex(curves[-1].evaluate(iet.total / 3.0))
    orbit, itinerary = pwi_mod.iterate(adapted, start, cfg.levels * 10)
    csv_path = _write(cfg.out, "orbit.csv", pwi_mod.orbit_to_csv(orbit, itinerary))
    payload = {"orbit_csv": csv_path, "pwi": adapted.to_json(), "theta_source": origin}
    _emit(cfg, f"wrote {csv_path}", payload)
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    iet = cfg.build()
    trace = rauzy.rauzy_iterate(iet, max(cfg.deep_levels or 0, 200))
    deep = min(cfg.deep_levels or max(2 * cfg.levels, 45), trace.n_steps)
    depth = min(cfg.levels, deep)
    theta, origin = _resolve_theta(cfg, iet, trace)
    curves = breaking.breaking_sequence(trace, theta, deep)
    seq = breaking.theta_sequence(trace, theta, deep)

    report = verify.quasi_embedding_suite(trace, curves, seq, depth, seed=cfg.seed)
    conv = verify.convergence_report(curves, seq, trace)
    report.checks.extend(conv.checks)

    injective, witness = verify.injectivity(curves[-1])
    report.add("injectivity", 0.0 if injective else 1.0, 0.5,
               meta={"witness": list(witness) if witness else None})

    summ = spectral.summability_check(trace, theta, trace.n_steps)
    # pass on the strict flag or on genuine decay down to the noise horizon
    decay_ok = summ.decays or (summ.horizon >= 15 and summ.ratio_to_initial <= 0.05)
    report.add("summability", 0.0 if decay_ok else 1.0, 0.5,
               meta={"horizon": summ.horizon, "final_term": summ.final_term,
                     "total": summ.total, "strict_decays": summ.decays,
                     "ratio_to_initial": summ.ratio_to_initial})

    theta_float = [float(t) % tau for t in theta]
    adapted = pwi_mod.adapted_pwi(curves[-1], iet, theta_float)
    defect = verify.embedding_defect(curves[-1], adapted, iet)
    report.add("embedding_defect", defect, 1e-6, n=deep)

    if cfg.json_output:
        print(report.to_json())
    else:
        print(report.summary())
        print(f"theta source: {origin}")
    return 0 if report.all_pass else 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="ietpwi",
        description="interval exchange renormalization, invariant curves and "
                    "piecewise isometry embeddings")
    parser.add_argument("--config", help="JSON config file; flags override it")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--perm", help='monodromy string, e.g. "4 3 2 1", or JSON')
        p.add_argument("--lambda", dest="lengths",
                       help="comma-separated lengths; fractions like 43/100 allowed")
        p.add_argument("--theta", help="comma-separated rotation coordinates")
        p.add_argument("--steps", dest="levels", type=int, help="induction levels")
        p.add_argument("--zorich-steps", dest="zorich_steps", type=int)
        p.add_argument("--delta", type=float, help="sampling radius start value")
        p.add_argument("--seed", type=int, help="random seed")
        p.add_argument("--deep-levels", dest="deep_levels", type=int,
                       help="level of the limit-proxy curve")
        p.add_argument("--out", help="output path")
        p.add_argument("--json", dest="json_output", action="store_true",
                       help="machine-readable output only")
        p.add_argument("--catalog", dest="use_catalog", action="store_true",
                       help="use the built-in self-inducing 4-symbol exchange")

    handlers = {
        "induct": cmd_induct,
        "zorich": cmd_zorich,
        "rauzy-graph": cmd_rauzy_graph,
        "lyapunov": cmd_lyapunov,
        "sample-theta": cmd_sample_theta,
        "curve": cmd_curve,
        "pwi": cmd_pwi,
        "verify": cmd_verify,
    }
    for name in handlers:
        common(sub.add_parser(name))

    args = parser.parse_args(argv)
    cfg = RunConfig.from_args(args)
    try:
        return handlers[args.command](cfg)
    except IetPwiError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
