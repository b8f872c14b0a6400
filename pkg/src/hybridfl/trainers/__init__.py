"""Learning algorithms expressed as query plans over the federation engine.

Import submodules directly (``hybridfl.trainers.dt`` etc.); this package
init stays import-free so party-side trainer math never drags the
protocol engine in with it.
"""
