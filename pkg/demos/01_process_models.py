"""
Coating-property models over coded process parameters
=====================================================

Each property is exp(quadratic polynomial) of the five coded process inputs.
"""

import numpy as np

from sprayopt.glm import DEFAULT_REGISTRY, MODEL_NAMES, PARAM_NAMES, convexity_report, denormalize, normalize

# Physical settings map to coded units through the material box: the center
# goes to the origin and each bound to +/-1.
x = np.array([49.10, 259.22, 0.84, 101.01, 727.73])
z = normalize(x)
print("physical:", dict(zip(PARAM_NAMES, x)))
print("coded:   ", np.round(z, 4))
print("back:    ", denormalize(z))

# Every model is evaluated at the same coded point.
for name in MODEL_NAMES:
    model = DEFAULT_REGISTRY[name]
    print(f"{name:<12}{model.predict(z):10.3f} {model.unit}")

# At the origin every prediction reduces to exp(intercept).
print("hardness at center:", DEFAULT_REGISTRY["hardness"].predict(np.zeros(5)))

# Analytic derivatives feed the SQP solver.
hardness = DEFAULT_REGISTRY["hardness"]
print("gradient:", np.round(hardness.gradient(z), 3))
print(hardness.formula())

# Hardness has only interaction curvature, so its Hessian is indefinite somewhere.
for name in ("hardness", "porosity", "velocity"):
    rep = convexity_report(DEFAULT_REGISTRY[name])
    print(f"{name:<10} {rep.classification:<22} min eigenvalue {rep.min_eigenvalue:+.3g}")
