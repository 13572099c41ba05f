"""Exact and nonstandard Minkowski dimension of digit-restricted fractals."""

__version__ = "0.1.0"

from .digit_fractal import (  # noqa: E402
    Blocks,
    Constant,
    ExplicitPrefix,
    Partition,
    PartitionSchedule,
    Product,
    cantor,
    covering_count,
    covering_exponent,
    dumps_schedule,
    loads_schedule,
    make_floor_power,
    make_ngrowth,
    make_rational_dim,
    product_schedule,
    ratio,
    ratio_log,
    sample_points,
)
from .dimension import (  # noqa: E402
    ScaleSequence,
    classical_dims,
    content_dimension_check,
    hausdorff_bound_check,
    product_summability_check,
    qdim,
)
from .dyadic_cover import PointCloud, dyadic_count, product_cloud, sandwich_check  # noqa: E402
from .estimator import fit_dimension, saturation_window, scale_table  # noqa: E402
from .ultrafilter import (  # noqa: E402
    BoundedSequence,
    UltrafilterOracle,
    axiom_audit,
    make_oracle,
    qlim,
    qlim_joint,
    uniqueness_check,
)
