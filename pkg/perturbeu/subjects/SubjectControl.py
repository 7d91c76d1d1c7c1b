from concurrent.futures import ProcessPoolExecutor
from datetime import datetime
from itertools import repeat
import logging
from typing import Dict
from typing import List
from typing import Optional
from typing import Union

import numpy as np
import pandas as pd
from rich.progress import track
from scipy import stats

from perturbeu.data.Dataset import Dataset
from perturbeu.subjects.SubjectAnalysis import ReportRow
from perturbeu.subjects.SubjectAnalysis import SubjectAnalysis
from perturbeu.subjects.SubjectAnalysis import analyze_subject
from perturbeu.subjects.SubjectAnalysis import report_columns
from perturbeu.utils.config import RunConfig


class SubjectControl:
    """
    Control object for interfacing with `SubjectAnalysis` objects

    Attributes
    ----------
    `datasets` : list of Dataset
        Parsed subjects

    `config` : RunConfig
        Measures, tolerances and worker count

    `failures` : dict
        subject id -> message for subjects rejected while reading

    Methods
    -------
    `run_all()`
        Run every `SubjectAnalysis`

    `results()`
        Report rows of all subjects, ordered by subject id

    `summary()`
        Cohort statistics of e* and CCEI

    """

    def __init__(
        self,
        datasets: List[Dataset] = None,
        config: Optional[RunConfig] = None,
        failures: Optional[Dict[str, str]] = None,
    ):

        if datasets is None:
            raise ValueError("`datasets` must be a list of `Dataset`")

        self.config: RunConfig = config or RunConfig()
        self.failures: Dict[str, str] = dict(failures or {})
        self.subjects: Dict[str, SubjectAnalysis] = self.__instantiate_subject_objects(
            datasets
        )

    def __str__(self) -> str:
        self_str: str = f"""
        Subjects
        --------
        {len(self.subjects)} subject(s), {len(self.failures)} rejected on input
        """
        for v in self.subjects.values():
            self_str = self_str + str(v)

        return self_str

    def __len__(self) -> int:
        return len(self.subjects) + len(self.failures)

    def __instantiate_subject_objects(
        self, datasets: List[Dataset]
    ) -> Dict[str, SubjectAnalysis]:
        """Create one `SubjectAnalysis` per dataset

        Returns
        ----------
        `subjects` : Dict[str, `SubjectAnalysis`]
            keyed and ordered by subject id

        """
        subjects: dict = {}
        for d in sorted(datasets, key=lambda d: d.subject_id):
            if d.subject_id in subjects:
                raise ValueError(f"duplicate subject id '{d.subject_id}'")
            subjects[d.subject_id] = SubjectAnalysis(dataset=d, config=self.config)

        return subjects

    def run_all(self, show_time: bool = False) -> None:
        """Run all `SubjectAnalysis` objects

        Uses a process pool when `config.workers` > 1; rows are
        attached back in subject id order.

        Parameters
        ----------
        show_time : bool
            show time statistics

        """
        start = datetime.now()
        analyses = list(self.subjects.values())

        if self.config.workers > 1 and len(analyses) > 1:
            with ProcessPoolExecutor(max_workers=self.config.workers) as pool:
                rows = pool.map(
                    analyze_subject,
                    [a.dataset for a in analyses],
                    repeat(self.config),
                )
                for analysis, row in track(
                    zip(analyses, rows), total=len(analyses), description="Subjects"
                ):
                    analysis.set_row(row)
        else:
            for analysis in track(analyses, description="Subjects"):

                if not isinstance(analysis, SubjectAnalysis):
                    raise ValueError("Iterable must be type `SubjectAnalysis`")

                analysis.run_all(show_time=show_time)

        logging.info(f"{len(analyses)} subject(s) analysed in {datetime.now() - start}")
        if show_time:
            print("Subjects Done-", datetime.now() - start)

    @property
    def rows(self) -> List[ReportRow]:
        rows = [a.row for a in self.subjects.values() if a.processed]
        rows += [ReportRow(subject_id=k, errors=[f"input: {v}"]) for k, v in self.failures.items()]
        return sorted(rows, key=lambda r: r.subject_id)

    @property
    def all_failed(self) -> bool:
        return bool(len(self)) and all(r.failed for r in self.rows)

    def results(self, as_dataframe: Optional[bool] = False) -> Union[dict, pd.DataFrame]:
        """Get processed results from all `SubjectAnalysis` objects

        Parameters
        ----------
        as_dataframe : bool
            return as pandas dataframe with the report columns

        """
        all_results: dict = {r.subject_id: r.to_dict() for r in self.rows}

        if as_dataframe:
            frame = pd.DataFrame(list(all_results.values()), dtype=object)
            return frame.reindex(columns=report_columns(self.config))

        return all_results

    def summary(self) -> dict:
        """Mean and median of e* and CCEI, and their rank correlation"""
        rows = self.rows
        e_oeu = np.array([r.e_star_oeu for r in rows if r.e_star_oeu is not None], dtype=float)
        e_seu = np.array([r.e_star_seu for r in rows if r.e_star_seu is not None], dtype=float)
        cci = np.array([r.ccei for r in rows if r.ccei is not None], dtype=float)

        paired = [(r.e_star_oeu, r.ccei) for r in rows if r.e_star_oeu is not None and r.ccei is not None]
        return {
            "n_subjects": len(rows),
            "n_failed": sum(r.failed for r in rows),
            "mean_e_star_oeu": _mean(e_oeu),
            "median_e_star_oeu": _median(e_oeu),
            "mean_e_star_seu": _mean(e_seu),
            "median_e_star_seu": _median(e_seu),
            "mean_ccei": _mean(cci),
            "median_ccei": _median(cci),
            "spearman_e_star_ccei": _spearman(paired),
        }


def _mean(values: np.ndarray) -> Optional[float]:
    return float(np.mean(values)) if values.size else None


def _median(values: np.ndarray) -> Optional[float]:
    return float(np.median(values)) if values.size else None


def _spearman(pairs: List[tuple]) -> Optional[float]:
    if len(pairs) < 3:
        return None
    a, b = (np.array(v, dtype=float) for v in zip(*pairs))
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        return None
    return float(stats.spearmanr(a, b).correlation)
