# Package for scalar LQ differential game solvers
