// placeholder, replaced by the experiment config implementation
