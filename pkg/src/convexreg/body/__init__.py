"""Convex bodies, their constructors and the JSON body format."""

from .core import (
    BodyError,
    ConvexBody,
    DegenerateBodyError,
    DifferenceBody,
    Ellipsoid,
    InnerBody,
    LinearImageBody,
    LpBall,
    OuterBody,
    PolarBody,
    ProjectionBody,
    RadialBody,
    SectionBody,
    SumBody,
    TranslateBody,
    VPolytope,
    HullPolytope,
    ball,
    cross_polytope,
    cube,
    probe_inradius,
)
from .ops import (
    LiftBody,
    inner_reg,
    linear_image,
    minkowski_diff_body,
    outer_reg,
    polar,
    project,
    random_polytope,
    regular_simplex,
    section,
    simplex_sharp_subspace,
    translate,
)

__all__ = [
    "BodyError",
    "ConvexBody",
    "DegenerateBodyError",
    "DifferenceBody",
    "Ellipsoid",
    "InnerBody",
    "LiftBody",
    "LinearImageBody",
    "LpBall",
    "OuterBody",
    "PolarBody",
    "ProjectionBody",
    "RadialBody",
    "SectionBody",
    "SumBody",
    "TranslateBody",
    "VPolytope",
    "HullPolytope",
    "ball",
    "cross_polytope",
    "cube",
    "inner_reg",
    "linear_image",
    "minkowski_diff_body",
    "outer_reg",
    "polar",
    "probe_inradius",
    "project",
    "random_polytope",
    "regular_simplex",
    "section",
    "simplex_sharp_subspace",
    "translate",
]
