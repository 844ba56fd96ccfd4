"""Report schema version tracking.

SCHEMA_VERSION tracks the layout of emitted reports: CSV headers, the
``summary.json`` keys and the meaning of verdict records. Bump this when
a downstream reader would need to change, NOT for new experiment kinds
that only add tables.

Bump rules:
- Patch (1.0.x): new optional keys, extra diagnostics
- Minor (1.x.0): new required keys, renamed tables
- Major (x.0.0): changed CSV columns or verdict semantics
"""

SCHEMA_VERSION = "1.0.0"
