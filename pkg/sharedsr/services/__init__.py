"""Expression handling, fitting, identifiability, search and reporting."""
