# Utilities Package