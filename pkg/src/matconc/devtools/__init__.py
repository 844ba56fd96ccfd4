"""Development and analysis tools for emitted reports."""
