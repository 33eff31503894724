"""Command-line front end.

Every leaf command builds a :class:`~efilab.report.Report`, prints it as a
fixed-width table and optionally writes the JSON form to ``--json PATH``.
Exit status: 0 success, 1 a theorem-violation flag fired, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .circuits import CircuitError, parse_circuit, run_generator
from .commitment import (
    binding_parameter,
    collapse_deviation,
    commit,
    from_efi,
    hiding_advantage,
    optimal_binding_attack,
    honest_binding_norm,
    parse_scheme,
    sampled_binding_attacks,
    serialize_scheme,
    verify_opening,
)
from .efi import EfiPair, amplification_check, distinguisher_advantage, farness, parse_pair, serialize_pair
from .ot import (
    CGS_TOL,
    build_ot_from_commitment,
    cgs_check,
    naive_ck88,
    ot_correctness,
    ot_to_efi,
    parse_ot,
    receiver_attack,
    receiver_attack_conditioned,
    sender_attack,
    serialize_ot,
)
from .protocol import ProtocolError, measured_registers, run_protocol, sample_outcomes
from .qstate import LayoutError, fidelity, helstrom, set_qubit_cap, trace_distance
from .report import Report
from .twopc import classify, insecure_protocol, ot_from_f, parse_table
from .zkstates import extract_instance_states, gamma2_factors, instance_farness, parse_rounded, truncation_factors

INPUT_ERRORS = (OSError, ValueError, CircuitError, ProtocolError, LayoutError, KeyError, json.JSONDecodeError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _read(report: Report, path: str) -> str:
    text = Path(path).read_text(encoding="utf-8")
    report.add_input(path)
    return text


def _write(report: Report, path: str | None, text: str, key: str = "written"):
    if path:
        Path(path).write_text(text, encoding="utf-8")
        report.results[key] = str(path)


def _pair_from_circuits(report, args) -> EfiPair:
    return EfiPair(parse_circuit(_read(report, args.a)), parse_circuit(_read(report, args.b)))


# -- states --------------------------------------------------------------------

def cmd_states_td(args, report):
    a = run_generator(parse_circuit(_read(report, args.a)))
    b = run_generator(parse_circuit(_read(report, args.b)))
    report.results["trace_distance"] = trace_distance(a, b)


def cmd_states_fidelity(args, report):
    a = run_generator(parse_circuit(_read(report, args.a)))
    b = run_generator(parse_circuit(_read(report, args.b)))
    f = fidelity(a, b)
    report.results.update(fidelity=f, sqrt_fidelity=math.sqrt(f))


def cmd_states_helstrom(args, report):
    a = run_generator(parse_circuit(_read(report, args.a)))
    b = run_generator(parse_circuit(_read(report, args.b)))
    meas, success = helstrom(a, b)
    report.results.update(success=success, trace_distance=trace_distance(a, b),
                          rank_rho_outcome=int(round(np.trace(meas.projector("rho")).real)))


def _amplification(report, pair, n_max, tol):
    rows = amplification_check(pair, n_max, tol)
    report.results["farness"] = farness(pair)
    report.results["rows"] = [{"n": r.n, "actual": r.actual, "bound": r.bound} for r in rows]
    for r in rows:
        if r.violation:
            report.flag("violation", f"n={r.n}: distance {r.actual:.12g} below bound {r.bound:.12g}")


def cmd_states_amplify(args, report):
    _amplification(report, _pair_from_circuits(report, args), args.n, args.tol)


# -- efi -----------------------------------------------------------------------

def cmd_efi_farness(args, report):
    report.results["farness"] = farness(parse_pair(_read(report, args.pair)))


def cmd_efi_check_amplify(args, report):
    _amplification(report, parse_pair(_read(report, args.pair)), args.n_max, args.tol)


def cmd_efi_advantage(args, report):
    pair = parse_pair(_read(report, args.pair))
    d = parse_circuit(_read(report, args.dist))
    adv, far = distinguisher_advantage(pair, d), farness(pair)
    report.results.update(advantage=adv, farness=far)
    if adv > far + args.tol:
        report.flag("violation", "distinguisher advantage exceeds the trace distance")


# -- commit --------------------------------------------------------------------

def _scheme_results(report, s, args):
    hid, bind = hiding_advantage(s), binding_parameter(s)
    report.results.update(hiding_advantage=hid, binding_parameter=bind,
                          completeness=min(verify_opening(s, b, commit(s, b)) for b in (0, 1)))
    if hid**2 + bind**2 > 1 + args.tol:
        report.flag("violation", "binding^2 + hiding^2 exceeds 1")
    return hid, bind


def cmd_commit_from_efi(args, report):
    pair = parse_pair(_read(report, args.pair))
    s = from_efi(pair)
    report.results["farness"] = farness(pair)
    _scheme_results(report, s, args)
    _write(report, args.out, serialize_scheme(s))


def cmd_commit_analyze(args, report):
    s = parse_scheme(_read(report, args.scheme))
    _, bind = _scheme_results(report, s, args)
    sampled = sampled_binding_attacks(s, np.random.default_rng(args.seed), args.samples)
    report.results["sampled_attack_max"] = float(sampled.max())
    report.results["uhlmann_attack"] = honest_binding_norm(s, optimal_binding_attack(s))
    report.results["attack_samples"] = args.samples
    report.flag("note", "sampled binding attacks use a 2-qubit auxiliary register")
    if sampled.max() > bind + args.tol:
        report.flag("violation", "a sampled attack beats the binding parameter")


def cmd_commit_verify(args, report):
    s = parse_scheme(_read(report, args.scheme))
    report.results["acceptance"] = verify_opening(s, args.bit, commit(s, args.opening))


def cmd_commit_collapse(args, report):
    s = parse_scheme(_read(report, args.scheme))
    h = np.array([1, 1]) / np.sqrt(2)
    vec = h if args.projector == "plus" else np.array([1.0, 0.0])
    dev = collapse_deviation(s, [1 / np.sqrt(2), 1 / np.sqrt(2)], np.outer(vec, vec), ["S"])
    bind = binding_parameter(s)
    report.results.update(collapse_deviation=dev, binding_parameter=bind)
    if bind <= args.tol and dev > args.tol:
        report.flag("violation", "perfectly binding scheme shows a collapse deviation")


# -- ot ------------------------------------------------------------------------

def cmd_ot_ck88(args, report):
    p = naive_ck88()
    report.results["correctness"] = ot_correctness(p)
    _write(report, args.out, serialize_ot(p))


def cmd_ot_from_commitment(args, report):
    p = build_ot_from_commitment(parse_scheme(_read(report, args.scheme)))
    report.results["correctness"] = ot_correctness(p)
    report.results["width"] = p.spec.width
    _write(report, args.out, serialize_ot(p))


def cmd_ot_run(args, report):
    p = parse_ot(_read(report, args.protocol))
    inputs = p.inputs(args.x0, args.x1, args.b)
    trace = run_protocol(p.spec, inputs, mode="honest", rng=np.random.default_rng(args.seed))
    probs = trace.state.probabilities([p.out])
    expected = (args.x0, args.x1)[args.b]
    report.results.update(p_out_0=float(probs[0]), p_out_1=float(probs[1]),
                          p_correct=float(probs[expected]), sampled_outcomes=trace.outcomes)
    if args.shots:
        draws = sample_outcomes(p.spec, trace.state, np.random.default_rng(args.seed), args.shots)
        names = measured_registers(p.spec)
        if p.out not in names:
            raise ValueError(f"output register {p.out} is not measured")
        shift = sum(p.spec.layout.size(r) for r in names[names.index(p.out) + 1:])
        report.results["shots"] = args.shots
        report.results["frequency_correct"] = float(np.mean(((draws >> shift) & 1) == expected))


def cmd_ot_attack(args, report):
    p = parse_ot(_read(report, args.protocol))
    report.results.update(p_a_star=receiver_attack(p)[0], p_b_star=sender_attack(p)[0],
                          p_a_conditioned=receiver_attack_conditioned(p))


def cmd_ot_cgs(args, report):
    p = parse_ot(_read(report, args.protocol))
    r = cgs_check(p, CGS_TOL)
    report.results.update(r.as_dict())
    report.results["correctness"] = ot_correctness(p)
    if r.violation:
        report.flag("violation", f"2 p_b + p_a = {r.cgs_lhs:.12g} < 2")
    if abs(r.p_a_conditioned - r.p_a_star) > CGS_TOL:
        report.flag("note", "conditioned and averaged receiver attacks differ")


def cmd_ot_to_efi(args, report):
    p = parse_ot(_read(report, args.protocol))
    pair = ot_to_efi(p)
    r = cgs_check(p)
    td_g, td_h = trace_distance(*r.g_states), trace_distance(*r.h_states)
    far = farness(pair)
    report.results.update(farness=far, td_g=td_g, td_h=td_h, p_a_star=r.p_a_star, p_b_star=r.p_b_star)
    if far < max(td_g, td_h) - args.tol:
        report.flag("violation", "pair farness below a side distance")
    if max(r.p_a_star, r.p_b_star) >= 2 / 3 and far < 1 / 3 - CGS_TOL:
        report.flag("violation", "attack success >= 2/3 but farness < 1/3")
    _write(report, args.out, serialize_pair(pair))


# -- fn ------------------------------------------------------------------------

def cmd_fn_classify(args, report):
    f = parse_table(_read(report, args.table))
    verdict = classify(f)
    report.results["verdict"] = str(verdict)
    report.results["kind"] = verdict.kind
    if verdict.witness is not None:
        report.results["witness"] = list(verdict.witness)
    else:
        report.results["classes"] = [list(c) for c in verdict.protocol.classes]
        report.results["message_bits"] = verdict.protocol.message_bits
        report.results["certificate_passes"] = verdict.protocol.passes
        if not verdict.protocol.passes:
            report.flag("violation", "privacy certificate failed on a minor-free table")
    report.results["note"] = verdict.note


def cmd_fn_to_ot(args, report):
    f = parse_table(_read(report, args.table))
    verdict = classify(f)
    if verdict.witness is None:
        raise ValueError("table is minor-free; it does not yield oblivious transfer")
    p = ot_from_f(f, verdict.witness, insecure_protocol(f))
    report.results.update(witness=list(verdict.witness), correctness=ot_correctness(p), width=p.spec.width)
    _write(report, args.out, serialize_ot(p))


# -- zk ------------------------------------------------------------------------

def cmd_zk_extract(args, report):
    rp = parse_rounded(_read(report, args.protocol))
    pair = extract_instance_states(rp)
    trunc = truncation_factors(rp)
    g2 = gamma2_factors(rp)
    report.results.update(
        rounds=rp.k,
        factor_distances=[trace_distance(a, b) for a, b in zip(pair.gamma0, pair.gamma1)],
        farness=pair.farness, mode=pair.farness_mode,
        truncation_deviation=max(float(np.max(np.abs(a.mat - b.mat))) for a, b in zip(pair.gamma0, trunc)),
        gamma2_identical=all(np.array_equal(a.mat, b.mat) for a, b in zip(pair.gamma0, g2)),
    )
    report.flag("note", "states come from the real interaction; simulator equivalence is not checked")


def cmd_zk_farness(args, report):
    rp = parse_rounded(_read(report, args.protocol))
    pair = extract_instance_states(rp)
    far = instance_farness(pair, "lower_bound" if args.lower_bound else "auto")
    report.results.update(farness=far.value, mode=far.mode)


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--json", metavar="PATH", help="also write the JSON report here")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--cap", type=int, default=10, help="density-matrix qubit cap")
    common.add_argument("--tol", type=float, default=1e-9, help="report tolerance")

    root = _Parser(prog="efilab", description=__doc__.splitlines()[0])
    root.add_argument("--version", action="version", version=f"efilab {__version__}")
    groups = root.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def leaf(group, name, func, *arguments):
        sp = group.add_parser(name, parents=[common])
        for flags, kw in arguments:
            sp.add_argument(*flags, **kw)
        sp.set_defaults(func=func)

    req = lambda *flags, **kw: (flags, {"required": True, **kw})  # noqa: E731
    opt = lambda *flags, **kw: (flags, kw)  # noqa: E731
    bit = {"type": int, "choices": (0, 1)}

    states = groups.add_parser("states").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    leaf(states, "td", cmd_states_td, req("--a"), req("--b"))
    leaf(states, "fidelity", cmd_states_fidelity, req("--a"), req("--b"))
    leaf(states, "helstrom", cmd_states_helstrom, req("--a"), req("--b"))
    leaf(states, "amplify", cmd_states_amplify, req("--a"), req("--b"), opt("--n", type=int, default=2))

    efi = groups.add_parser("efi").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    leaf(efi, "farness", cmd_efi_farness, req("--pair"))
    leaf(efi, "check-amplify", cmd_efi_check_amplify, req("--pair"), opt("--n-max", type=int, default=3))
    leaf(efi, "advantage", cmd_efi_advantage, req("--pair"), req("--dist"))

    com = groups.add_parser("commit").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    leaf(com, "from-efi", cmd_commit_from_efi, req("--pair"), opt("--out"))
    leaf(com, "analyze", cmd_commit_analyze, req("--scheme"), opt("--samples", type=int, default=200))
    leaf(com, "verify", cmd_commit_verify, req("--scheme"), req("--bit", **bit), req("--opening", **bit))
    leaf(com, "collapse", cmd_commit_collapse, req("--scheme"),
         opt("--projector", choices=("plus", "zero"), default="plus"))

    ot = groups.add_parser("ot").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    leaf(ot, "ck88", cmd_ot_ck88, opt("--out"))
    leaf(ot, "from-commitment", cmd_ot_from_commitment, req("--scheme"), opt("--out"))
    leaf(ot, "run", cmd_ot_run, req("--protocol"), req("--x0", **bit), req("--x1", **bit), req("--b", **bit),
         opt("--shots", type=int, default=0))
    leaf(ot, "attack", cmd_ot_attack, req("--protocol"))
    leaf(ot, "cgs", cmd_ot_cgs, req("--protocol"))
    leaf(ot, "to-efi", cmd_ot_to_efi, req("--protocol"), opt("--out"))

    fn = groups.add_parser("fn").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    leaf(fn, "classify", cmd_fn_classify, req("--table"))
    leaf(fn, "to-ot", cmd_fn_to_ot, req("--table"), opt("--out"))

    zk = groups.add_parser("zk").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    leaf(zk, "extract", cmd_zk_extract, req("--protocol"))
    leaf(zk, "farness", cmd_zk_farness, req("--protocol"), opt("--lower-bound", action="store_true"))
    return root


def dispatch(argv=None) -> tuple[int, Report | None]:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2, None
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0), None
    report = Report(f"{args.group} {args.cmd}", args.seed, __version__)
    old_cap = set_qubit_cap(args.cap)
    try:
        args.func(args, report)
    except INPUT_ERRORS as exc:
        print(f"efilab: error: {exc}", file=sys.stderr)
        return 2, None
    finally:
        set_qubit_cap(old_cap)
    sys.stdout.write(report.to_text())
    if args.json:
        Path(args.json).write_text(report.to_json(), encoding="utf-8")
    return (1 if report.has_violation else 0), report


def main(argv=None) -> int:
    return dispatch(argv)[0]


if __name__ == "__main__":
    sys.exit(main())
