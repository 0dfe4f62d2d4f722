"""IMP program synthesis workbench.

Packages an interpreter for the small imperative language IMP, regular
tree grammars with a padded binary form, number-theoretic encodings of
terms and runs, checkable execution certificates, and synthesis engines
(enumerative PBE, verification, CEGIS) over finite and infinite input
domains.
"""

__version__ = "0.1.0"
