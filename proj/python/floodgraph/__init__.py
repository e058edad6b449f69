"""Watershed-graph flash-flood susceptibility toolkit.

The heavy lifting lives in the C++ extension module; this package re-exports
its surface. Grids cross the boundary as (array, header) pairs where header
is (xll, yll, cellsize, nodata) and masked cells hold the nodata value.
"""

from floodgraph._core import *  # noqa: F401,F403
from floodgraph._core import __doc__ as _core_doc  # noqa: F401
