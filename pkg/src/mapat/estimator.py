"""scikit-learn style wrapper around :func:`mapat.core.locate_many`.

Each sample row holds the measurements of ``M`` components interleaved as
``[aoa_0, tof_0, aoa_1, tof_1, ...]`` (radians, seconds). The target is the
UE position ``(x, y)`` in meters.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .core import MapAtParams, locate_many
from .exceptions import PreconditionError
from .floormap import FloorMap
from .geometry import Point


class MapAtLocator(BaseEstimator, RegressorMixin):
    """Map-assisted locator with the estimator interface.

    ``fit`` only checks and stores the map and BS position; there is nothing to
    learn. ``predict`` returns NaN rows for samples with no candidate location.
    """

    def __init__(self, floor_map=None, bs=(0.0, 0.0), max_interactions=3,
                 cluster_radius_m=0.5, min_leg_m=1e-3):
        self.floor_map = floor_map
        self.bs = bs
        self.max_interactions = max_interactions
        self.cluster_radius_m = cluster_radius_m
        self.min_leg_m = min_leg_m

    def fit(self, X=None, y=None):
        if not isinstance(self.floor_map, FloorMap):
            raise PreconditionError("floor_map must be a FloorMap")
        bs = Point(*self.bs)
        if not self.floor_map.bounds.contains(bs):
            raise PreconditionError("bs lies outside the map bounds")
        self.params_ = MapAtParams(self.max_interactions, self.cluster_radius_m, self.min_leg_m)
        self.bs_ = bs
        if X is not None:
            self.n_features_in_ = self._split(X)[0].shape[1] * 2
        return self

    @staticmethod
    def _split(X):
        X = check_array(X, dtype=np.float64)
        if X.shape[1] % 2:
            raise PreconditionError("X needs an (aoa, tof) pair per component")
        return X[:, 0::2], X[:, 1::2]

    def predict(self, X):
        check_is_fitted(self, "params_")
        aoas, tofs = self._split(X)
        return locate_many(self.floor_map, self.bs_, aoas, tofs, self.params_)["xy"]

    def score(self, X, y, sample_weight=None):
        """Negative mean position error in meters; outages count as infinite error."""
        y = check_array(y, dtype=np.float64)
        err = np.hypot(*(self.predict(X) - y).T)
        err = np.where(np.isnan(err), np.inf, err)
        return -float(np.average(err, weights=sample_weight))
