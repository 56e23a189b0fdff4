"""mqmcat: a translator-controlled multi-agent translation workbench.

Specialized quality-dimension agents propose targeted revisions, a router
picks which of them to involve, and a shared translation memory grounds
everything in confirmed prior decisions. Ships with an HTTP workbench API
and an offline evaluation harness (BLEU, METEOR-lite, paired bootstrap).
"""

__version__ = "0.1.0"
