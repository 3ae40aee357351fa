"""
.. currentmodule:: wfbench.tools

========================================
tools (:mod:`wfbench.tools`)
========================================

Numerical kernels used to pick and group morphing targets.


Outlier scores
--------------

.. autosummary::
    :toctree: generated/

    lof


Clustering
----------

PAM, AGNES and DIANA over a precomputed distance matrix, and the ranking of
clusters by distance that target designation walks.

.. autosummary::
    :toctree: generated/

    clustering


Cluster validity
----------------

.. autosummary::
    :toctree: generated/

    validity

"""
