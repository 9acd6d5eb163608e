# Main application package