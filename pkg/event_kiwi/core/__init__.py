"""Domain types shared by every pipeline stage."""
