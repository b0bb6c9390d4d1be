"""
Reduction constants - Source Package
"""
