"""Command-line entry points: build-kb, annotate, gen, eval, sweep, stats, train-lr, synth, serve."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections import Counter
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .corpus import CorpusError, ParseIssue, corpus_build_id, parse_corpus, write_corpus
from .disambiguation import DEFAULT_EPSILON, DEFAULT_TAU, DisambConfig
from .evalkit import (
    Dataset,
    DatasetError,
    coverage_stats,
    dt_disambiguator,
    eval_annot,
    eval_disamb,
    gen_annot,
    gen_disamb,
    gen_long,
    mc_disambiguator,
    random_disambiguator,
    read_dataset,
    rho_grid,
    sweep_rho,
    write_csv,
    write_dataset,
)
from .evalkit.metrics import report_row
from .index_io import IndexFormatError, load_kb, save_kb
from .kb import DEFAULT_MIN_LINK, DEFAULT_MIN_LP, BuildReport, KbConsistencyError, KnowledgeBase, build_kb
from .pipeline import PipelineConfig, annotate_payload
from .pruning import DEFAULT_RHO_NA, LrModel, PruneConfig, PruneMethod, build_training_cases, train_lr

log = logging.getLogger("wikitag")

KB_ENV = "WIKITAG_KB"


class UsageError(Exception):
    pass


def unit_interval(value: str) -> float:
    try:
        v = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {value!r}") from None
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"{v} is outside [0, 1]")
    return v


def window_size(value: str) -> int:
    try:
        v = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {value!r}") from None
    if v < 2:
        raise argparse.ArgumentTypeError("window must be at least 2")
    return v


def positive_int(value: str) -> int:
    v = int(value)
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def add_annotate_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rho", type=unit_interval, default=DEFAULT_RHO_NA, help="pruning threshold rho_NA (default: %(default)s)")
    p.add_argument("--eps", type=unit_interval, default=DEFAULT_EPSILON, help="DT top-set width epsilon (default: %(default)s)")
    p.add_argument("--tau", type=unit_interval, default=DEFAULT_TAU, help="commonness cutoff tau (default: %(default)s)")
    p.add_argument("--window", type=window_size, default=10, help="anchors per window on long texts (default: %(default)s)")
    p.add_argument("--long-threshold", type=positive_int, default=11,
                   help="mention count above which windowing is used (default: %(default)s)")
    p.add_argument("--pruner", choices=[m.value for m in PruneMethod], default="avg", help="pruning score (default: %(default)s)")
    p.add_argument("--lr-model", type=Path, default=None, help="coefficients file for --pruner lr (default: none)")
    p.add_argument("--single-anchor-fallback", action="store_true",
                   help="annotate one-anchor texts with their most common sense (default: off)")


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    model = LrModel.load(args.lr_model) if args.lr_model else None
    if args.pruner == PruneMethod.LR.value and model is None:
        raise UsageError("--pruner lr requires --lr-model")
    return PipelineConfig(
        disamb=DisambConfig(tau=args.tau, epsilon=args.eps, single_anchor_fallback=args.single_anchor_fallback),
        prune=PruneConfig(method=args.pruner, rho_na=args.rho, lr_model=model),
        window_anchors=args.window,
        long_text_threshold=args.long_threshold,
    )


def _kb_path(args: argparse.Namespace) -> Path:
    path = args.kb or os.environ.get(KB_ENV)
    if not path:
        raise UsageError(f"no KB given: pass --kb or set {KB_ENV}")
    return Path(path)


def _load_kb(args: argparse.Namespace) -> KnowledgeBase:
    return load_kb(_kb_path(args))


def _read_pages(path: Path, strict: bool = False):
    if not path.exists():
        raise UsageError(f"corpus not found: {path}")
    issues: list[ParseIssue] = []
    pages = list(parse_corpus(path, strict=strict, errors=issues))
    for issue in issues:
        print(f"{path}:{issue.line_no}: {issue.message}", file=sys.stderr)
    return pages, issues


def _check_build(kb: KnowledgeBase, build_id: str, what: str) -> None:
    if kb.build_id and build_id and kb.build_id != build_id:
        raise UsageError(f"{what} build id {build_id} does not match KB build id {kb.build_id}")


def _stats_line(kb: KnowledgeBase) -> str:
    st = kb.stats()
    return (f"pages={st.n_pages} anchors={st.n_anchors} edges={st.n_edges} "
            f"avg_senses={st.avg_senses_per_anchor:.4f} avg_in_degree={st.avg_in_degree:.4f}")


# -- subcommands ----------------------------------------------------------

def cmd_build_kb(args: argparse.Namespace) -> int:
    pages, issues = _read_pages(args.corpus, args.strict)
    report = BuildReport()
    kb = build_kb(pages, build_id=corpus_build_id(args.corpus), min_link=args.min_link,
                  min_lp=args.min_lp, report=report)
    save_kb(kb, args.out)
    print(f"{_stats_line(kb)} malformed_lines={len(issues)} "
          f"dropped_links={sum(report.dropped_links.values())} build_id={kb.build_id}")
    return 0


def _iter_batch(fh):
    for n, line in enumerate(fh, 1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        if "\t" in line:
            text_id, text = line.split("\t", 1)
        else:
            text_id, text = str(n), line
        yield text_id, text


def cmd_annotate(args: argparse.Namespace) -> int:
    kb = _load_kb(args)
    cfg = config_from_args(args)
    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        if args.text is not None:
            items = [("0", args.text)]
        elif args.input is None or str(args.input) == "-":
            items = _iter_batch(sys.stdin)
        else:
            items = _iter_batch(open(args.input, encoding="utf-8"))
        for text_id, text in items:
            rec = {"id": text_id, **annotate_payload(text, kb, cfg, not args.only_linked)}
            out.write(json.dumps(rec, ensure_ascii=False) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    kb = _load_kb(args)
    pages, _ = _read_pages(args.corpus)
    _check_build(kb, corpus_build_id(args.corpus), "corpus")
    conflicts: Counter = Counter()
    if args.style == "disamb":
        cases = gen_disamb(pages, kb, args.n, args.fragment_words, args.seed)
        params = {"n": args.n, "fragment_words": args.fragment_words, "seed": args.seed}
    elif args.style == "annot":
        cases = gen_annot(pages, kb, args.n, args.fragment_words, args.seed, conflicts)
        params = {"n": args.n, "fragment_words": args.fragment_words, "seed": args.seed}
    else:
        cases = gen_long(pages, kb, args.n, args.min_links, args.seed, conflicts)
        params = {"n": args.n, "min_links": args.min_links, "seed": args.seed}
    write_dataset(args.out, Dataset(args.style, kb.build_id, cases, params))
    print(f"wrote {len(cases)} {args.style} cases to {args.out}"
          f" (expansion conflicts: {sum(conflicts.values())})")
    return 0


def _dataset_for(args: argparse.Namespace, kb: KnowledgeBase) -> Dataset:
    ds = read_dataset(args.dataset)
    _check_build(kb, ds.build_id, "dataset")
    return ds


def cmd_eval(args: argparse.Namespace) -> int:
    kb = _load_kb(args)
    ds = _dataset_for(args, kb)
    cfg = config_from_args(args)
    if ds.style == "disamb":
        algo = {"dt": lambda: dt_disambiguator(cfg.disamb), "mc": mc_disambiguator,
                "random": lambda: random_disambiguator(args.seed)}[args.algo]()
        report = eval_disamb(ds.cases, kb, algo)
        row = report_row(report, algo=args.algo, tau=cfg.disamb.tau, eps=cfg.disamb.epsilon)
    else:
        report = eval_annot(ds.cases, kb, cfg)
        row = report_row(report, pruner=cfg.prune.method.value, rho_na=cfg.prune.rho_na,
                         tau=cfg.disamb.tau, eps=cfg.disamb.epsilon)
    write_csv([row], args.out or sys.stdout)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    kb = _load_kb(args)
    ds = _dataset_for(args, kb)
    if ds.style == "disamb":
        raise UsageError("sweep needs an annot or long dataset")
    rows = sweep_rho(ds.cases, kb, config_from_args(args), rho_grid(args.step))
    write_csv(rows, args.out or sys.stdout)
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    kb = _load_kb(args)
    out = {"kb": asdict(kb.stats()), "build_id": kb.build_id}
    if args.fragments:
        texts = [t for _, t in _iter_batch(open(args.fragments, encoding="utf-8"))]
        cov = coverage_stats(texts, kb)
        out["coverage"] = {k: (v if not isinstance(v, dict) else {str(a): b for a, b in v.items()})
                           for k, v in asdict(cov).items()}
    print(json.dumps(out, indent=2))
    return 0


def cmd_train_lr(args: argparse.Namespace) -> int:
    kb = _load_kb(args)
    ds = _dataset_for(args, kb)
    if ds.style == "disamb":
        raise UsageError("train-lr needs an annot or long dataset")
    cfg = config_from_args(args)
    cases = build_training_cases(ds.cases, kb, cfg)
    model = train_lr(cases)
    model.save(args.out)
    print(f"trained on {len(cases)} cases: alpha={model.alpha:.6f} beta={model.beta:.6f} gamma={model.gamma:.6f}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    from .synth import SynthParams, generate

    sc = generate(SynthParams(seed=args.seed, n_clusters=args.clusters))
    write_corpus(sc.pages, args.out)
    print(f"wrote {len(sc.pages)} pages to {args.out}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .service import serve

    kb = _load_kb(args)
    serve(kb, config_from_args(args), host=args.host, port=args.port,
          max_text_chars=args.max_text_chars, memory_budget_mb=args.memory_budget_mb)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wikitag", description="Annotate short texts with knowledge-base senses.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging (default: off)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-kb", help="build the index from a corpus file")
    p.add_argument("--corpus", type=Path, required=True, help="line-delimited corpus file")
    p.add_argument("--out", type=Path, required=True, help="index file to write")
    p.add_argument("--min-link", type=positive_int, default=DEFAULT_MIN_LINK, help="minimum link(a) (default: %(default)s)")
    p.add_argument("--min-lp", type=unit_interval, default=DEFAULT_MIN_LP, help="minimum lp(a); 0 disables (default: %(default)s)")
    p.add_argument("--strict", action="store_true", help="fail on the first malformed line (default: skip)")
    p.set_defaults(func=cmd_build_kb)

    def kb_flag(p):
        p.add_argument("--kb", type=Path, default=None, help=f"index file (default: ${KB_ENV})")

    p = sub.add_parser("annotate", help="annotate one text or a batch")
    kb_flag(p)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--text", default=None, help="a single text to annotate")
    src.add_argument("--input", type=Path, default=None, help="batch file, one text per line, optional 'id<TAB>' prefix (default: stdin)")
    p.add_argument("--output", type=Path, default=None, help="output file (default: stdout)")
    p.add_argument("--only-linked", action="store_true", help="omit NA annotations (default: include them)")
    add_annotate_flags(p)
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("gen", help="generate an evaluation dataset")
    kb_flag(p)
    p.add_argument("style", choices=["disamb", "annot", "long"])
    p.add_argument("--corpus", type=Path, required=True, help="corpus the KB was built from")
    p.add_argument("--n", type=positive_int, default=1000, help="number of cases (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="sampling seed (default: %(default)s)")
    p.add_argument("--fragment-words", type=positive_int, default=30, help="fragment length in words (default: %(default)s)")
    p.add_argument("--min-links", type=positive_int, default=10, help="long style: minimum links per article (default: %(default)s)")
    p.add_argument("--out", type=Path, required=True, help="dataset file to write")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("eval", help="evaluate on a dataset, one CSV row")
    kb_flag(p)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--algo", choices=["dt", "mc", "random"], default="dt", help="disamb datasets only (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="seed of the random baseline (default: %(default)s)")
    p.add_argument("--out", type=Path, default=None, help="CSV file (default: stdout)")
    add_annotate_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="metrics over a rho_NA grid, CSV")
    kb_flag(p)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--step", type=float, default=0.01, help="grid step over [0, 1] (default: %(default)s)")
    p.add_argument("--out", type=Path, default=None, help="CSV file (default: stdout)")
    add_annotate_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("stats", help="KB statistics and optional anchor coverage of fragments")
    kb_flag(p)
    p.add_argument("--fragments", type=Path, default=None, help="one fragment per line (default: none)")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train-lr", help="fit the linear-regression pruner")
    kb_flag(p)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="coefficients file to write")
    add_annotate_flags(p)
    p.set_defaults(func=cmd_train_lr)

    p = sub.add_parser("synth", help="write a synthetic corpus")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0, help="(default: %(default)s)")
    p.add_argument("--clusters", type=positive_int, default=12, help="topic clusters (default: %(default)s)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("serve", help="HTTP annotation service")
    kb_flag(p)
    p.add_argument("--host", default="127.0.0.1", help="(default: %(default)s)")
    p.add_argument("--port", type=positive_int, default=8080, help="(default: %(default)s)")
    p.add_argument("--max-text-chars", type=positive_int, default=100_000, help="413 above this length (default: %(default)s)")
    p.add_argument("--memory-budget-mb", type=float, default=None, help="refuse to start if RSS after load exceeds this (default: no limit)")
    add_annotate_flags(p)
    p.set_defaults(func=cmd_serve)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits 2
    except (CorpusError, KbConsistencyError, IndexFormatError, DatasetError, ValueError, MemoryError) as exc:
        print(f"wikitag: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
