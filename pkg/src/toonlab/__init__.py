"""toonlab: a desk-scale cartoonization workbench.

Subpackages:
  imageprep  - image IO, edge-aware smoothing, perceptual-hash dedup
  nncore     - dense tensor layers with analytic gradients, AdamW, cyclic LR
  models     - generator / patch discriminator and the CGWT checkpoint format
  losses     - adversarial + content objectives and the combined total
  trainer    - datasets, warm-up and adversarial training loops, stylization
  surveycore - ranking-survey definition, session service, mean-rank report
"""

__version__ = "0.1.0"
