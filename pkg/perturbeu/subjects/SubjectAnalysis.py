from dataclasses import dataclass
from dataclasses import field
from datetime import datetime
import logging
from typing import Callable
from typing import Dict
from typing import List
from typing import Optional

from perturbeu.data.Dataset import Dataset
from perturbeu.measures.Behavior.BehavioralMetrics import MetricsRow
from perturbeu.measures.Behavior.BehavioralMetrics import metrics_row
from perturbeu.measures.Efficiency.CCEI import ccei
from perturbeu.measures.Perturbation.PerturbationSolver import PerturbationSolution
from perturbeu.measures.Perturbation.PerturbationSolver import min_e_oeu
from perturbeu.measures.Perturbation.PerturbationSolver import min_e_seu
from perturbeu.measures.Robustness.Robustness import RobustnessRow
from perturbeu.measures.Robustness.Robustness import robustness_row
from perturbeu.measures.Testing.MinimumPerturbationTest import MPTestParams
from perturbeu.measures.Testing.MinimumPerturbationTest import MPTestResult
from perturbeu.measures.Testing.MinimumPerturbationTest import mp_test
from perturbeu.utils.config import RunConfig
from perturbeu.utils.errors import PerturbEUError
from perturbeu.utils.utils import merge_dicts
from perturbeu.utils.utils import radius_key


@dataclass
class ReportRow:
    """
    Per-subject bundle of every computed measure

    Missing values stay None and are written as NA. `errors`
    lists the stages that failed as 'stage: message'.

    """

    subject_id: str
    K: Optional[int] = None
    S: Optional[int] = None
    e_star_oeu: Optional[float] = None
    e_star_seu: Optional[float] = None
    ccei: Optional[float] = None
    metrics: Optional[MetricsRow] = None
    robustness: Optional[RobustnessRow] = None
    test: Optional[MPTestResult] = None
    errors: List[str] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return self.e_star_oeu is None

    def to_dict(self) -> dict:
        row: dict = {
            "subject": self.subject_id,
            "K": self.K,
            "S": self.S,
            "e_star_oeu": self.e_star_oeu,
            "e_star_seu": self.e_star_seu,
            "ccei": self.ccei,
        }
        if self.metrics is not None:
            row = merge_dicts(row, self.metrics.to_dict())
        if self.robustness is not None:
            robust = self.robustness.to_dict()
            robust.pop("e_full")
            row = merge_dicts(row, robust)
        if self.test is not None:
            row = merge_dicts(
                row,
                {
                    "mp_var_eps": self.test.var_eps,
                    "mp_xi2": self.test.xi2,
                    "mp_c_alpha": self.test.c_alpha,
                    "mp_statistic": self.test.statistic,
                    "mp_reject": self.test.reject,
                },
            )
        row["errors"] = "; ".join(self.errors) if self.errors else None
        return row


def report_columns(config: RunConfig) -> List[str]:
    """Column order of the per-subject report"""
    columns = ["subject", "K", "S", "e_star_oeu", "e_star_seu", "ccei"]
    columns += ["fosd_count", "fosd_fraction", "dsd_rho", "e_upper_bound", "e_upper_bound_cross"]
    columns += [radius_key(r) for r in config.radii]
    for m in config.drops:
        columns += [f"e_drop{m}", f"dropped{m}"]
    if config.drops:
        columns.append("e_bar")
    if config.mptest:
        columns += ["mp_var_eps", "mp_xi2", "mp_c_alpha", "mp_statistic", "mp_reject"]
    columns.append("errors")
    return columns


def _attempt(stage: str, func: Callable, row: ReportRow):
    """Run one stage, recording a package or numerical failure on `row`"""
    try:
        return func()
    except (PerturbEUError, ValueError, RuntimeError) as e:
        logging.warning(f"{stage} failed for {row.subject_id}: {e}")
        row.errors.append(f"{stage}: {e}")
        return None


def analyze_subject(d: Dataset, config: Optional[RunConfig] = None) -> ReportRow:
    """Every measure `config` asks for, failures isolated per stage"""
    config = config or RunConfig()
    tau = config.tie_tolerance
    row = ReportRow(subject_id=d.subject_id, K=d.K, S=d.S)

    solution: Optional[PerturbationSolution] = _attempt(
        "e_star_oeu", lambda: min_e_oeu(d, tau), row
    )
    if solution is not None:
        row.e_star_oeu = solution.e_star

    if config.seu:
        seu = _attempt("e_star_seu", lambda: min_e_seu(d, tau), row)
        row.e_star_seu = None if seu is None else seu.e_star

    row.ccei = _attempt("ccei", lambda: ccei(d, config.ccei_tol), row)
    row.metrics = _attempt("metrics", lambda: metrics_row(d, config.radii), row)

    if config.drops:
        row.robustness = _attempt(
            "robustness",
            lambda: robustness_row(d, config.drops, tau, e_full=row.e_star_oeu),
            row,
        )

    if config.mptest and row.e_star_oeu is not None:
        params = MPTestParams(
            eta1=config.eta1,
            eta2=config.eta2,
            alpha=config.alpha,
            draws=config.draws,
            seed=config.seed,
        )
        row.test = _attempt("mp_test", lambda: mp_test(d, params, e_star=row.e_star_oeu), row)

    return row


class SubjectAnalysis:
    """
    Analysis of a single subject

    Attributes
    ----------
    `dataset` : Dataset
        Subject data

    `config` : RunConfig
        Measures and tolerances to use

    `processed` : bool
        Whether `run_all()` has completed

    Methods
    -------
    `run_all()`
        Compute every configured measure

    `results()`
        Report row as a dict

    """

    def __init__(self, dataset: Dataset = None, config: Optional[RunConfig] = None):

        if not isinstance(dataset, Dataset):
            raise ValueError("`dataset` must be type `Dataset`")

        self.dataset: Dataset = dataset
        self.config: RunConfig = config or RunConfig()
        self.processed: bool = False

        self.row: ReportRow

    @property
    def name(self) -> str:
        return self.dataset.subject_id

    def __str__(self) -> str:
        self_str: str = f"""
            {self.name}
            K={self.dataset.K} S={self.dataset.S}
            """

        if self.processed:
            self_str = (
                self_str
                + f"""
                e*={self.row.e_star_oeu} CCEI={self.row.ccei}
                """
            )
        return self_str

    def __repr__(self) -> str:
        return f"<SubjectAnalysis {self.name}>"

    def __eq__(self, o: object) -> bool:
        if isinstance(o, SubjectAnalysis):
            return o.name == self.name
        return False

    def __hash__(self) -> int:
        return hash(self.name)

    def run_all(self, show_time: bool = False) -> None:
        """Run all configured measures

        Parameters
        ----------
        show_time : bool
            show time statistics

        """
        start_time: datetime = datetime.now()
        self.set_row(analyze_subject(self.dataset, self.config))

        if show_time:
            print(self.name + "-", datetime.now() - start_time)

    def set_row(self, row: ReportRow) -> None:
        """Attach a row computed elsewhere (worker pools)

        Defines
        ----------
        `self.row`
            report row of this subject

        """
        self.row = row
        self.processed = True
        logging.info(f"Subject {self.name} processed with {len(row.errors)} error(s)")

    def results(self) -> Dict:
        if not self.processed:
            raise AssertionError(f"Subject {self.name} not processed, call `run_all()`")
        return self.row.to_dict()
