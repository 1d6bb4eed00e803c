"""Command-line interface for uavport"""
from .main import main

__all__ = ['main']
