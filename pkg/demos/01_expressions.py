"""Metric components as expressions: parsing, folding and exact jets.

Components are written in a small infix language.  Parsing folds
constants, and ``compile_jets`` returns values, gradients and Hessians
by forward-mode differentiation, so curvature never needs a finite
difference.
"""

import numpy as np

from pwlab.exprlang import compile_jets, parse

e = parse("4/(1+x1^2+x2^2)^2", 2)
print("parsed:", e)

jet = compile_jets([e], 2, 2)
val, grad, hess = jet(np.array([0.3, -0.2]))
print("value   ", val[0])
print("gradient", grad[0])
print("hessian ", hess[0].tolist())

# compare the gradient with a central difference
h = 1e-6
fd = [(jet(np.array([0.3 + h, -0.2]))[0][0] - jet(np.array([0.3 - h, -0.2]))[0][0]) / (2 * h),
      (jet(np.array([0.3, -0.2 + h]))[0][0] - jet(np.array([0.3, -0.2 - h]))[0][0]) / (2 * h)]
print("finite difference gradient", fd)
