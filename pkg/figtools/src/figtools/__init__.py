"""Figure generation from solver CSV outputs.

Consumes only the documented CSV contracts:
  error tables  h,l2,l2_order,h1,h1_order,dg,dg_order
  slices        s,x,y,side,value
"""

from .convergence import ErrorTable, plot_convergence, read_error_table
from .slices import SliceCurve, overlay_discrepancy, plot_slice_overlay, read_slice

__all__ = [
    "ErrorTable",
    "SliceCurve",
    "overlay_discrepancy",
    "plot_convergence",
    "plot_slice_overlay",
    "read_error_table",
    "read_slice",
]
