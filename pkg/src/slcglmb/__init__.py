"""GLMB and SLC-GLMB multitarget densities, filters and diagnostics."""
