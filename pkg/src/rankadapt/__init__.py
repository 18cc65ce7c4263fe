"""rankadapt: adaptive listwise ranking for sequential recommendation.

A frozen global ranking model is specialised to each scoring request by a
lightweight adaptor conditioned on the request's candidate set: a latent
summary of the candidates modulates the model's inputs and patches its
scoring head, with no per-request gradient steps.
"""
__version__ = "0.1.0"
