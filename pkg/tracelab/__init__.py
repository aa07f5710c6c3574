"""tracelab: trace functions over F_p, sums of their products and the
cancellation / main-term predictions for them."""

__version__ = "0.1.0"
