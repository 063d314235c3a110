# Multi-perspective scientific information extraction toolkit
