from .coverage import CoverageReport, coverage_stats
from .datasets import (
    AnnotCase,
    Dataset,
    DatasetError,
    DisambCase,
    GoldSpan,
    gen_annot,
    gen_disamb,
    gen_long,
    read_dataset,
    write_dataset,
)
from .metrics import (
    PRF,
    MetricReport,
    best_row,
    dt_disambiguator,
    eval_annot,
    eval_disamb,
    mc_disambiguator,
    prf,
    random_disambiguator,
    rho_grid,
    score_annotations,
    sweep_rho,
    write_csv,
)
