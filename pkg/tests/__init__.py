"""
Tests package for the reduction constants tool.
"""
