"""Scikit-learn style front end: an :class:`Instance` plays the role of ``X``."""

from __future__ import annotations

import os

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_is_fitted

from .instance import Instance, InstanceError, load_instance, read_instance, validate_instance
from .search import SearchConfig, multi_restart


def check_instance(X) -> Instance:
    """Coerce ``X`` (Instance, JSON-like dict or path) to a validated :class:`Instance`."""
    if isinstance(X, (str, os.PathLike)):
        X = read_instance(X)
    elif isinstance(X, dict):
        import io
        import json

        X = load_instance(io.StringIO(json.dumps(X)), "json")
    elif not isinstance(X, Instance):
        raise TypeError(f"expected an Instance, a JSON mapping or a path, got {type(X).__name__}")
    problems = validate_instance(X)
    if problems:
        raise InstanceError(problems)
    return X


def _seed_from(random_state) -> int:
    if isinstance(random_state, (int, np.integer)):
        return int(random_state)
    return int(check_random_state(random_state).randint(0, 2**63 - 1, dtype=np.int64))


class TabuDistricting(ClusterMixin, BaseEstimator):
    """Partition the units of an instance into ``n_districts`` contiguous districts.

    ``fit`` runs ``n_restarts`` independent searches and keeps the plan with
    the lowest objective. ``labels_`` is indexed like ``X.ids``.
    """

    def __init__(self, n_districts=2, method="tabu", composite=True, w_pop=1.0, w_comp=0.0,
                 tabu_factor=0.08, nim_factor=3.0, n_restarts=1, window=3, n_jobs=1,
                 random_state=None):
        self.n_districts = n_districts
        self.method = method
        self.composite = composite
        self.w_pop = w_pop
        self.w_comp = w_comp
        self.tabu_factor = tabu_factor
        self.nim_factor = nim_factor
        self.n_restarts = n_restarts
        self.window = window
        self.n_jobs = n_jobs
        self.random_state = random_state

    def _config(self, seed: int) -> SearchConfig:
        return SearchConfig(
            r=int(self.n_districts), method=self.method, composite_enabled=bool(self.composite),
            tabu_factor=self.tabu_factor, nim_factor=self.nim_factor,
            weight_popdev=self.w_pop, weight_compactness=self.w_comp, seed=seed,
            window=self.window,
        )

    def fit(self, X, y=None):
        instance = check_instance(X)
        if not 1 <= self.n_districts <= instance.n:
            raise ValueError(f"n_districts must lie in [1, {instance.n}], got {self.n_districts}")
        if self.n_restarts < 1:
            raise ValueError("n_restarts must be at least 1")
        config = self._config(_seed_from(self.random_state))
        runs = multi_restart(instance, config, self.n_restarts, self.n_jobs or 1)
        best = min(range(len(runs)), key=lambda i: (runs[i].value.combined, i))
        self.runs_ = runs
        self.best_run_ = runs[best]
        self.labels_ = np.asarray(runs[best].assignment, dtype=np.intp)
        self.objective_ = runs[best].value
        self.scores_ = np.array([r.value.combined for r in runs])
        self.n_iter_ = runs[best].iterations
        self.unit_ids_ = np.asarray(instance.ids)
        return self

    def predict(self, X):
        """Labels of the fitted instance; other instances cannot be assigned."""
        check_is_fitted(self, "labels_")
        instance = check_instance(X)
        if not np.array_equal(np.asarray(instance.ids), self.unit_ids_):
            raise ValueError("predict only supports the instance the estimator was fitted on")
        return self.labels_.copy()

    def score(self, X, y=None):
        check_is_fitted(self, "labels_")
        self.predict(X)
        return -float(self.objective_.combined)

    def plan(self, X):
        from .plan import Plan

        check_is_fitted(self, "labels_")
        return Plan(check_instance(X), self.labels_.tolist(), int(self.n_districts))
