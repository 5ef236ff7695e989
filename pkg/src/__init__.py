"""Source package for the PATL model checker."""
