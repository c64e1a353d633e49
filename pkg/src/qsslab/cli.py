"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 structural mismatch,
4 verification failure, 5 resource limit.
"""

import argparse
import itertools
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import protocols, schemes, structures, verifier

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_MISMATCH = 3
EXIT_VERIFICATION = 4
EXIT_RESOURCE = 5


@dataclass
class CliConfig:
    tolerance: float = 1e-9
    output_format: str = "text"
    seed: int = 42
    max_qubits: int = 14


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _fmt(x):
    return f"{x:.12g}"


def _read_json(path, kind):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise CliError(f"{kind} file not found: {path}", EXIT_INPUT) from None
    except json.JSONDecodeError as exc:
        raise CliError(f"{kind} file {path} is not valid JSON: {exc}", EXIT_INPUT) from None


def _load_structure(path):
    try:
        return structures.load_structure(_read_json(path, "structure"))
    except structures.StructureError as exc:
        raise CliError(f"bad structure {path}: {exc}", EXIT_INPUT) from None


def _load_scheme(path):
    try:
        return schemes.load_scheme(_read_json(path, "scheme"), name=Path(path).stem)
    except schemes.SchemeError as exc:
        raise CliError(f"bad scheme {path}: {exc}", EXIT_INPUT) from None


def _emit(text, out):
    if out:
        Path(out).write_text(text + ("" if text.endswith("\n") else "\n"))
    else:
        print(text)


def _dump(doc):
    return json.dumps(doc, indent=2, sort_keys=True)


def _parse_players(raw):
    try:
        values = [int(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError:
        raise CliError(f"expected comma-separated player numbers, got {raw!r}", EXIT_INPUT)
    if not values:
        raise CliError(f"empty player list {raw!r}", EXIT_INPUT)
    return values


def _config(args):
    cfg = CliConfig(
        tolerance=getattr(args, "tolerance", 1e-9),
        output_format=getattr(args, "format", "text"),
        seed=getattr(args, "seed", 42),
    )
    if not 1e-12 <= cfg.tolerance <= 1e-6:
        raise CliError(f"tolerance {cfg.tolerance} outside [1e-12, 1e-6]", EXIT_INPUT)
    return cfg


# ---------------------------------------------------------------------------
# subcommands


def cmd_structure_check(args):
    cfg = _config(args)
    gamma = _load_structure(args.path)
    if not structures.is_quantum_admissible(gamma):
        bad = next(
            (a, b)
            for a, b in itertools.combinations(gamma.minimal_sets, 2)
            if a.bits & b.bits == 0
        )
        raise CliError(
            f"disjoint authorized sets {bad[0]} and {bad[1]}: not quantum-admissible",
            EXIT_INPUT,
        )
    partition = structures.adversary_partition(gamma)
    law = structures.check_complement_law(gamma)
    feas = structures.perfect_feasibility(gamma)
    doc = {
        "players": gamma.n,
        "minimal_authorized": [list(s.players()) for s in gamma.minimal_sets],
        "admissible": True,
        "a1": [list(s.players()) for s in partition.a1],
        "a2": [list(s.players()) for s in partition.a2],
        "complement_law": law.holds,
        "perfect": "feasible" if feas.feasible else "infeasible",
        "perfect_witness": list(feas.witness.players()) if feas.witness else None,
    }
    if cfg.output_format == "json":
        print(_dump(doc))
    else:
        verdict = "feasible" if feas.feasible else "infeasible"
        print(f"admissible; |A1|={len(partition.a1)} |A2|={len(partition.a2)}; perfect: {verdict}")
        print("A1:", ", ".join(str(s) for s in partition.a1) or "(empty)")
        print("A2:", ", ".join(str(s) for s in partition.a2) or "(empty)")
        print(f"complement law: {'holds' if law.holds else f'fails at {law.counterexample}'}")
        if feas.witness:
            print(f"perfect-infeasibility witness: {feas.witness}")
    return EXIT_OK


def cmd_scheme_verify(args):
    cfg = _config(args)
    scheme = _load_scheme(args.scheme)
    gamma = _load_structure(args.structure)
    try:
        report = verifier.verify(scheme, gamma, args.model, cfg.tolerance)
    except verifier.StructuralMismatchError as exc:
        print(f"structural mismatch: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except verifier.ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (structures.StructureError, schemes.SchemeError) as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    if cfg.output_format == "json":
        out = _dump(verifier.report_to_dict(report))
    elif cfg.output_format == "csv":
        lines = ["subset;class;s_a;s_ra;i_ra;pass"]
        for r in report.records:
            subset = " ".join(str(p) for p in r.subset.players())
            lines.append(
                f"{subset};{r.classification};{_fmt(r.s_a)};{_fmt(r.s_ra)};"
                f"{_fmt(r.i_ra)};{r.condition_pass}"
            )
        out = "\n".join(lines)
    else:
        lines = [
            f"scheme {report.scheme}: verdict {report.verdict} "
            f"(requested {args.model}: {'pass' if report.meets_requested else 'FAIL'})",
            f"I(R:S)={_fmt(report.i_rs)}  S(S)={_fmt(report.s_s)}  "
            f"entropy balanced: {report.entropy_balanced}",
        ]
        for r in report.records:
            lines.append(
                f"  {str(r.subset):16s} {r.classification:10s} "
                f"I(R:A)={_fmt(r.i_ra):14s} {'ok' if r.condition_pass else 'FAIL'}"
            )
        out = "\n".join(lines)
    _emit(out, getattr(args, "out", None))
    if not report.meets_requested:
        witness = report.requested_witness
        print(f"verification failure at subset {witness}", file=sys.stderr)
        return EXIT_VERIFICATION
    return EXIT_OK


def cmd_build(args):
    try:
        if args.family == "threshold34":
            scheme = schemes.build_threshold34()
        elif args.family == "block":
            block = _parse_players(args.b)
            scheme, gamma = schemes.build_block_scheme(args.n, block)
        else:
            scheme, gamma = schemes.build_star_scheme(args.n, args.center)
    except (schemes.SchemeError, structures.StructureError) as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    doc = schemes.save_scheme(scheme)
    if args.family != "threshold34":
        doc["realizes"] = structures.structure_to_dict(gamma)
    _emit(_dump(doc), args.out)
    return EXIT_OK


def cmd_assign_induce(args):
    scheme = _load_scheme(args.scheme)
    base = _load_structure(args.base)
    try:
        induced = schemes.induce_structure(scheme, base)
    except schemes.SchemeError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    _emit(_dump(structures.structure_to_dict(induced)), getattr(args, "out", None))
    return EXIT_OK


def cmd_assign_search(args):
    cfg = _config(args)
    target = _load_structure(args.target)
    try:
        if args.scheme:
            scheme = _load_scheme(args.scheme)
            base = _load_structure(args.base)
        else:
            if args.base_n is None or args.base_b is None:
                raise CliError(
                    "provide --scheme/--base files or --base-n/--base-b", EXIT_INPUT
                )
            scheme, base = schemes.build_block_scheme(args.base_n, _parse_players(args.base_b))
        assignment = schemes.search_assignment(
            (scheme, base), target, allow_dealer=args.allow_dealer, tolerance=cfg.tolerance
        )
    except (schemes.SchemeError, structures.StructureError) as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    doc = {
        "base": scheme.name or "scheme",
        "target": structures.structure_to_dict(target),
        "assignment": {h: list(ps) for h, ps in assignment.items()} if assignment else None,
    }
    _emit(_dump(doc), getattr(args, "out", None))
    return EXIT_OK


def cmd_enumerate(args):
    cfg = _config(args)
    try:
        classes = structures.enumerate_hyperstars(args.max_n)
    except structures.StructureError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    rows = []
    for n, gamma in classes:
        rows.append(
            {
                "players": n,
                "minimal_authorized": [list(s.players()) for s in gamma.minimal_sets],
                "catalog_no": structures.catalog_number(gamma),
            }
        )
    if cfg.output_format == "json":
        out = _dump({"classes": rows})
    elif cfg.output_format == "csv":
        lines = ["players;structure;catalog_no"]
        for row in rows:
            sets = " ".join("".join(map(str, s)) for s in row["minimal_authorized"])
            lines.append(f"{row['players']};{sets};{row['catalog_no'] or '-'}")
        out = "\n".join(lines)
    else:
        lines = []
        for row in rows:
            sets = ", ".join("{" + ",".join(map(str, s)) + "}" for s in row["minimal_authorized"])
            tag = f"catalog No.{row['catalog_no']}" if row["catalog_no"] else "beyond catalog"
            lines.append(f"n={row['players']}  {sets}  [{tag}]")
        out = "\n".join(lines)
    _emit(out, getattr(args, "out", None))
    return EXIT_OK


def cmd_reconstruct(args):
    cfg = _config(args)
    scheme = _load_scheme(args.scheme)
    acting = _parse_players(args.set)
    rng = np.random.default_rng(cfg.seed)
    fidelities = []
    trace = None
    try:
        if args.protocol == "circuit":
            for _ in range(args.trials):
                outcome = protocols.run_threshold34_circuit(
                    protocols.random_secret(rng), acting, scheme=scheme
                )
                fidelities.append(outcome.fidelity)
                trace = outcome.trace
        elif args.protocol == "measure":
            if not args.block:
                raise CliError("--block is required for the measure protocol", EXIT_INPUT)
            block = _parse_players(args.block)
            for _ in range(args.trials):
                outcome = protocols.run_block_measure_protocol(
                    scheme, block, acting, protocols.random_secret(rng)
                )
                fidelities.append(outcome.fidelity)
                trace = outcome.trace
        else:
            state = schemes.distribute_purified(scheme)
            regs = [f"p{p}" for p in scheme.particles_of(
                structures.PlayerSubset.from_players(acting, scheme.num_players).bits
            )]
            result = protocols.decoupling_decoder(state, regs, ("R",))
            fidelities.append(result.fidelity)
            trace = {
                "protocol": "decoder",
                "acting": acting,
                "output_register": result.output_register,
                "i_re": result.i_re,
            }
    except protocols.UnauthorizedSetError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    except protocols.DecouplingError as exc:
        print(f"decoding failure: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION
    except protocols.ProtocolError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    doc = {"fidelities": fidelities, "trace": trace}
    if args.protocol in ("circuit", "measure"):
        doc["branch_probabilities"] = outcome.branch_probabilities
        doc["branch_fidelities"] = outcome.branch_fidelities
        doc["deviations"] = outcome.deviations
    if cfg.output_format == "json":
        _emit(_dump(doc), getattr(args, "out", None))
    else:
        for i, f in enumerate(fidelities, 1):
            print(f"trial {i}: fidelity {_fmt(f)}")
        print(f"min fidelity: {_fmt(min(fidelities))}")
    return EXIT_OK


def cmd_tables(args):
    cfg = _config(args)
    matrix = verifier.feasibility_matrix(tolerance=cfg.tolerance)
    doc = verifier.matrix_to_dict(matrix)
    csv_lines = ["no;players;structure;pqss;gqss;scheme;assignment;report_hash;notes"]
    for row in doc["rows"]:
        sets = " ".join("".join(map(str, s)) for s in row["structure"])
        assignment = (
            " ".join(
                f"{h}:{','.join(map(str, ps))}"
                for h, ps in sorted(row["assignment"].items())
                if ps
            )
            if row["assignment"]
            else "-"
        )
        csv_lines.append(
            f"{row['no']};{row['players']};{sets};{row['pqss']};{row['gqss']};"
            f"{row['scheme'] or '-'};{assignment};{row['report_hash'] or '-'};"
            f"{' | '.join(row['notes']) or '-'}"
        )
    csv_text = "\n".join(csv_lines)
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "feasibility.json").write_text(_dump(doc) + "\n")
        (out_dir / "feasibility.csv").write_text(csv_text + "\n")
        print(f"wrote {out_dir / 'feasibility.json'} and {out_dir / 'feasibility.csv'}")
    elif cfg.output_format == "csv":
        print(csv_text)
    else:
        print(_dump(doc))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_common(parser, *, fmt=True, tolerance=False, seed=False, out=False):
    if fmt:
        parser.add_argument("--format", choices=["json", "csv", "text"], default="text")
    if tolerance:
        parser.add_argument("--tolerance", type=float, default=1e-9)
    if seed:
        parser.add_argument("--seed", type=int, default=42)
    if out:
        parser.add_argument("--out", default=None)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qsslab",
        description="Construct, simulate, and verify quantum secret sharing schemes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_structure = sub.add_parser("structure", help="access-structure analyses")
    structure_sub = p_structure.add_subparsers(dest="action", required=True)
    p_check = structure_sub.add_parser("check", help="admissibility and adversary partition")
    p_check.add_argument("path")
    _add_common(p_check)
    p_check.set_defaults(func=cmd_structure_check)

    p_scheme = sub.add_parser("scheme", help="scheme analyses")
    scheme_sub = p_scheme.add_subparsers(dest="action", required=True)
    p_verify = scheme_sub.add_parser("verify", help="verify a scheme against a structure")
    p_verify.add_argument("scheme")
    p_verify.add_argument("structure")
    p_verify.add_argument("--model", choices=["perfect", "generalized"], default="generalized")
    _add_common(p_verify, tolerance=True, out=True)
    p_verify.set_defaults(func=cmd_scheme_verify)

    p_build = sub.add_parser("build", help="construct a scheme family member")
    p_build.add_argument("family", choices=["threshold34", "block", "star"])
    p_build.add_argument("--n", type=int, default=None)
    p_build.add_argument("--b", default=None, help="block players, e.g. 1,2")
    p_build.add_argument("--center", type=int, default=None)
    p_build.add_argument("--out", default=None)
    p_build.set_defaults(func=cmd_build)

    p_assign = sub.add_parser("assign", help="particle redistribution")
    assign_sub = p_assign.add_subparsers(dest="action", required=True)
    p_induce = assign_sub.add_parser("induce", help="induced structure of an assignment")
    p_induce.add_argument("--scheme", required=True)
    p_induce.add_argument("--base", required=True, help="structure over the particles")
    _add_common(p_induce, out=True)
    p_induce.set_defaults(func=cmd_assign_induce)
    p_search = assign_sub.add_parser("search", help="search assignments realizing a target")
    p_search.add_argument("--target", required=True)
    p_search.add_argument("--scheme", default=None)
    p_search.add_argument("--base", default=None)
    p_search.add_argument("--base-n", type=int, default=None)
    p_search.add_argument("--base-b", default=None)
    p_search.add_argument("--allow-dealer", action="store_true")
    _add_common(p_search, tolerance=True, out=True)
    p_search.set_defaults(func=cmd_assign_search)

    p_enum = sub.add_parser("enumerate", help="hyperstar isomorphism classes")
    p_enum.add_argument("--max-n", type=int, default=5)
    _add_common(p_enum, out=True)
    p_enum.set_defaults(func=cmd_enumerate)

    p_rec = sub.add_parser("reconstruct", help="run a reconstruction protocol")
    p_rec.add_argument("scheme")
    p_rec.add_argument("--set", required=True, help="acting players, e.g. 1,3,4")
    p_rec.add_argument("--protocol", choices=["circuit", "measure", "decoder"], default="circuit")
    p_rec.add_argument("--trials", type=int, default=20)
    p_rec.add_argument("--block", default=None, help="block players for the measure protocol")
    _add_common(p_rec, tolerance=True, seed=True, out=True)
    p_rec.set_defaults(func=cmd_reconstruct)

    p_tables = sub.add_parser("tables", help="catalog feasibility matrix")
    p_tables.add_argument("--out-dir", default=None)
    _add_common(p_tables, tolerance=True)
    p_tables.set_defaults(func=cmd_tables)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except verifier.ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
