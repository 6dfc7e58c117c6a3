"""Numerical radius and numerical index of finite-dimensional real normed spaces."""
