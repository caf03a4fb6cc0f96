"""lob-kernel: an end-user-development kernel.

Everything a user builds is a composition of a small construct vocabulary:
operand and operator constructs, layout and web structures, rewriting rules
grouped by connectors, and annotations. The ``core`` package defines the
constructs, ``engine`` evaluates and runs them, ``dsl`` reads and writes the
textual form, and the ``woad``, ``casmas``, and ``flow`` modules instantiate
the kernel for three different end-user environments. ``service`` exposes the
whole thing over files, a CLI, and HTTP.
"""

__version__ = "0.1.0"
