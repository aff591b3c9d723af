"""One-parameter families of ambient structures.

The linear interpolation ``g_t = (1-t) g_0 + t g_1`` (and likewise for the
Kahler forms) is the family used by the Moser transport and the metric-
variation monitors; its time derivative is the constant tensor ``g_1 - g_0``.
"""

from __future__ import annotations

import numpy as np

from .base import MetricField

__all__ = ["InterpolatedFamily", "InterpolatedField"]


class InterpolatedField(MetricField):
    """Convex combination of two fields' metric and Kahler data."""

    kind = "interpolated"

    def __init__(self, field0, field1, t):
        self.f0 = field0
        self.f1 = field1
        self.t = float(t)
        self.dim = field0.dim
        self.complex_dim = field0.complex_dim

    def metric(self, q):
        return (1 - self.t) * self.f0.metric(q) + self.t * self.f1.metric(q)

    def metric_d1(self, q):
        return (1 - self.t) * self.f0.metric_d1(q) + self.t * self.f1.metric_d1(q)

    def kahler(self, q):
        return (1 - self.t) * self.f0.kahler(q) + self.t * self.f1.kahler(q)

    def complex_structure(self, q):
        return self.f0.complex_structure(q)

    def holvol(self, q, vectors):
        return self.f0.holvol(q, vectors)

    def contains(self, q):
        return self.f0.contains(q)

    def validate(self, q):
        self.f0.validate(q)

    def coordinate_scales(self, q):
        return self.f0.coordinate_scales(q)

    def scale_function(self, q):
        return self.f0.scale_function(q)


class InterpolatedFamily:
    """t -> (1-t) field0 + t field1 with analytic time derivatives."""

    def __init__(self, field0, field1):
        self.f0 = field0
        self.f1 = field1

    def field(self, t):
        return InterpolatedField(self.f0, self.f1, t)

    def dmetric_dt(self, t, q):
        return self.f1.metric(q) - self.f0.metric(q)

    def dmetric_dt_d1(self, t, q):
        return self.f1.metric_d1(q) - self.f0.metric_d1(q)

    def dkahler_dt(self, t, q):
        return self.f1.kahler(q) - self.f0.kahler(q)
