"""Independent audit of finished event traces"""
from .verifier import CHECKS, TraceVerifier, rounding_slack, verify_trace, format_report

__all__ = ['CHECKS', 'TraceVerifier', 'rounding_slack', 'verify_trace', 'format_report']
