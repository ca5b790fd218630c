"""Episode ingestion, synthetic generation, labeling and segmentation."""
