"""oscint - principal-value oscillatory integrals of polynomial phases."""
