"""Command-line interface.

Exit codes: 0 success, 1 usage, 2 malformed input or failed validation,
3 internal invariant breach.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .. import compensation as comp
from .. import experiments as exp
from ..layout import AtomLayout, LayoutError, Physics, blockade_graph, validate
from ..mwis import DEFAULT_ENUMERATION_CAP, mwis_solve
from ..parity import ParityError, ParityLayout, lhz_encode
from ..physics import spectrum
from ..placement import PlacementConfig, place
from ..problem import Problem, ProblemError

CONFIG_ENV = "RYDBERG_PARITY_CONFIG"
EXIT_INPUT = 2
EXIT_INVARIANT = 3

log = logging.getLogger("rydberg_parity")


class InputError(Exception):
    """Malformed input file; message names the file and field."""


class InvariantError(Exception):
    pass


@dataclass
class RunConfig:
    physics: Physics = field(default_factory=Physics)
    placement: PlacementConfig = field(default_factory=PlacementConfig)
    scheme: str = "local"
    aleph_mode: str = "measured"
    cap: int = DEFAULT_ENUMERATION_CAP
    seed: int = 0

    @classmethod
    def from_json_dict(cls, doc: dict, source: str = "config") -> "RunConfig":
        cfg = cls()
        try:
            ph = doc.get("physics", {})
            if "c6" in ph:
                physics = Physics(d=float(ph.get("d", 1.0)), c6=float(ph["c6"]),
                                  rb=ph.get("rb"), alpha=float(ph.get("alpha", 1.0)))
            else:
                physics = Physics.from_ratio(float(ph.get("v_over_alpha", 8.0)), float(ph.get("alpha", 1.0)),
                                             float(ph.get("d", 1.0)), ph.get("rb"))
            placement = PlacementConfig(**doc.get("placement", {}))
        except (TypeError, ValueError, LayoutError) as exc:
            raise InputError(f"{source}: bad physics/placement section: {exc}") from None
        cfg = replace(cfg, physics=physics, placement=placement)
        for key in ("scheme", "aleph_mode", "cap", "seed"):
            if key in doc:
                cfg = replace(cfg, **{key: doc[key]})
        return cfg


def load_config(path: str | None) -> RunConfig:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return RunConfig()
    return RunConfig.from_json_dict(_read_json(path), path)


def _read_json(path: str):
    try:
        text = Path(path).read_text() if path != "-" else sys.stdin.read()
    except OSError as exc:
        raise InputError(f"{path}: cannot read: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None


def _load(path: str, kind):
    doc = _read_json(path)
    try:
        return kind.from_json_dict(doc)
    except (KeyError, TypeError) as exc:
        raise InputError(f"{path}: missing or malformed field {exc}") from None
    except (ValueError, ProblemError, ParityError, LayoutError) as exc:
        raise InputError(f"{path}: {exc}") from None


def _emit(text: str, out: str | None):
    if out and out != "-":
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _physics(cfg: RunConfig, args) -> Physics:
    ph = cfg.physics
    if args.v_over_alpha is not None or args.rb is not None:
        ph = Physics.from_ratio(args.v_over_alpha or ph.c6 / ph.d**6 / ph.alpha, ph.alpha, ph.d,
                                args.rb if args.rb is not None else ph.rb)
    return ph


# ---------------------------------------------------------------- invariants


def check_invariants(layout: AtomLayout, cap: int) -> list[str]:
    """Link copying and per-module optimality over all MWIS maximizers."""
    problems = []
    graph = blockade_graph(layout)
    if graph.n == 0:
        return problems
    if graph.n > cap:
        raise InvariantError(f"{graph.n} atoms exceeds the enumeration cap {cap}")
    _, sets = mwis_solve(graph)
    module_states = {m.id: set(comp._module_states(layout, m)) for m in layout.modules}
    for s in sets:
        for k, link in enumerate(layout.links):
            if (link.atoms[0] in s) != (link.atoms[-1] in s):
                problems.append(f"link {k}: corners disagree in maximizer {sorted(s)}")
        for m in layout.modules:
            if frozenset(x for x in s if x in m.atoms) not in module_states[m.id]:
                problems.append(f"module {m.id}: maximizer {sorted(s)} restricts to a non-optimal module state")
    return problems


# ---------------------------------------------------------------- commands


def cmd_encode(args, cfg):
    problem = _load(args.problem, Problem)
    try:
        parity = lhz_encode(problem)
    except ParityError as exc:
        raise InputError(f"{args.problem}: {exc}") from None
    _emit(parity.dumps(), args.output)


def cmd_place(args, cfg):
    parity = _load(args.parity, ParityLayout)
    pcfg = cfg.placement
    if args.link_length is not None:
        pcfg = replace(pcfg, link_length=args.link_length,
                       max_link_length=max(pcfg.max_link_length, args.link_length))
    layout = place(parity, pcfg, _physics(cfg, args))
    _emit(layout.dumps(), args.output)


def cmd_compensate(args, cfg):
    layout = _load(args.layout, AtomLayout)
    kw = {"aleph_mode": args.aleph or cfg.aleph_mode} if (args.scheme or cfg.scheme) == "local" else {}
    shifts = comp.compensate(layout, args.scheme or cfg.scheme, **kw)
    if args.shifts:
        Path(args.shifts).write_text(shifts.dumps() + "\n")
    _emit(comp.apply(layout.cleared().with_fields(
        {lab: layout.atoms[k].field for lab, k in layout.representatives.items()}), shifts).dumps(), args.output)


def cmd_spectrum(args, cfg):
    layout = _load(args.layout, AtomLayout)
    rep = spectrum(layout, args.cap or cfg.cap)
    log.info("W_max=%g delta_s=%.6g delta_g=%.6g", rep.w_max, rep.delta_s, rep.delta_g)
    _emit(rep.to_csv(absolute=args.absolute), args.output)


def cmd_solve(args, cfg):
    problem = _load(args.problem, Problem)
    e2e = exp.EndToEndConfig(cfg.physics, cfg.placement, cfg.scheme, cfg.aleph_mode,
                             args.field_scale, cfg.cap)
    v = exp.end_to_end(problem, e2e)
    doc = {
        "match": v.match,
        "decoded": [list(s) for s in v.decoded],
        "minimizers": [list(s) for s in v.minimizers],
        "problem_energy": v.problem_energy,
        "ground_energy": v.ground_energy,
        "solution_energy": v.solution_energy,
        "energy_diff": v.energy_diff,
        "delta_s": v.delta_s,
        "delta_g": v.delta_g,
    }
    _emit(json.dumps(doc, indent=2), args.output)


def cmd_sweep(args, cfg):
    if args.layout:
        layout = _load(args.layout, AtomLayout)
    else:
        layout = exp.reference_layout(cfg.physics, cfg.placement, cfg.scheme, cfg.aleph_mode)
    sigmas = tuple(np.logspace(np.log10(args.sigma_min), np.log10(args.sigma_max), args.points))
    scfg = exp.SweepConfig(sigmas, args.samples, args.distribution,
                           args.seed if args.seed is not None else cfg.seed, cfg.cap)
    parity = lhz_encode(exp.all_to_all_problem(exp._spin_count(layout)))
    table = exp.StateTable(layout, parity, cfg.cap)

    def one(k):
        sub = exp.SweepConfig((sigmas[k],), scfg.samples, scfg.distribution, scfg.seed, scfg.cap)
        return exp.field_sweep(layout, sub, table=table, seed_index=k).points[0]

    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        points = list(pool.map(one, range(len(sigmas))))
    _emit(exp.SweepResult(points).to_csv(), args.output)


def cmd_linkstudy(args, cfg):
    rows = exp.link_length_study(args.lengths, args.schemes, cfg.physics, cfg.cap)
    _emit(exp.study_csv(rows), args.output)


def cmd_verify(args, cfg):
    layout = _load(args.layout, AtomLayout)
    report = validate(layout)
    if not report.ok:
        for v in report.violations:
            print(f"{args.layout}: {v}", file=sys.stderr)
        return EXIT_INPUT
    problems = check_invariants(layout, args.cap or cfg.cap)
    if problems:
        for p in problems:
            print(f"{args.layout}: {p}", file=sys.stderr)
        return EXIT_INVARIANT
    print(f"{args.layout}: ok ({len(layout.atoms)} atoms)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rydberg-parity", description=__doc__.splitlines()[0])
    p.add_argument("--config", help=f"run config JSON (default: ${CONFIG_ENV})")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def out(sp):
        sp.add_argument("-o", "--output", help="output path (default stdout)")

    def phys(sp):
        sp.add_argument("--v-over-alpha", type=float, default=None)
        sp.add_argument("--rb", type=float, default=None)

    sp = sub.add_parser("encode", help="problem JSON -> parity layout JSON")
    sp.add_argument("problem"); out(sp); sp.set_defaults(fn=cmd_encode)

    sp = sub.add_parser("place", help="parity layout JSON -> atom layout JSON")
    sp.add_argument("parity"); sp.add_argument("--link-length", type=int); phys(sp); out(sp)
    sp.set_defaults(fn=cmd_place)

    sp = sub.add_parser("compensate", help="add compensation shifts to an atom layout")
    sp.add_argument("layout"); sp.add_argument("--scheme", choices=comp.SCHEMES)
    sp.add_argument("--aleph", choices=("infinity", "finite", "measured"))
    sp.add_argument("--shifts", help="also write the shifts JSON here"); out(sp)
    sp.set_defaults(fn=cmd_compensate)

    sp = sub.add_parser("spectrum", help="spectrum CSV of an atom layout")
    sp.add_argument("layout"); sp.add_argument("--absolute", action="store_true",
                                               help="energies in absolute units instead of alpha")
    sp.add_argument("--cap", type=int); out(sp); sp.set_defaults(fn=cmd_spectrum)

    sp = sub.add_parser("solve", help="run a problem end to end")
    sp.add_argument("problem"); sp.add_argument("--field-scale", type=float, default=0.05)
    out(sp); sp.set_defaults(fn=cmd_solve)

    sp = sub.add_parser("sweep", help="field-magnitude sweep CSV")
    sp.add_argument("--layout", help="compensated layout (default: reference layout)")
    sp.add_argument("--distribution", choices=exp.DISTRIBUTIONS, default="gaussian")
    sp.add_argument("--sigma-min", type=float, default=1e-3)
    sp.add_argument("--sigma-max", type=float, default=1.0)
    sp.add_argument("--points", type=int, default=13)
    sp.add_argument("--samples", type=int, default=200)
    sp.add_argument("--seed", type=int); out(sp); sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser("linkstudy", help="module-link-module spread/gap table")
    sp.add_argument("--lengths", type=int, nargs="+", default=[3, 5, 7, 9])
    sp.add_argument("--schemes", nargs="+", default=["none", "local", "global"])
    out(sp); sp.set_defaults(fn=cmd_linkstudy)

    sp = sub.add_parser("verify", help="validate a layout and check MWIS invariants")
    sp.add_argument("layout"); sp.add_argument("--cap", type=int); sp.set_defaults(fn=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        return args.fn(args, cfg) or 0
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ProblemError, ParityError, LayoutError, comp.CompensationError, exp.StageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InvariantError, AssertionError) as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
