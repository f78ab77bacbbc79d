"""Numerical defaults shared by the library entry points and the command line.

=========  ===========  ==============================================
name       value        meaning
=========  ===========  ==============================================
N          512          transform nodes
R          40.0         truncation radius
k          12           Galerkin basis dimension
tol        1e-10        Newton residual tolerance (sup-norm of grad Phi)
seed       0xC0FFEE     RNG seed for every randomized routine
=========  ===========  ==============================================

Environment overrides used by the command line: ``RADIALSOB_OUTDIR`` (output
directory) and ``RADIALSOB_THREADS`` (worker threads).
"""

N = 512
R = 40.0
K = 12
TOL = 1e-10
SEED = 0xC0FFEE

ENV_OUTDIR = "RADIALSOB_OUTDIR"
ENV_THREADS = "RADIALSOB_THREADS"
