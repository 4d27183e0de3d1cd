int main() {
    int x;
    if (x < 0) return 0;
    while (x > 0) {
        x--;
    }
    assert(x == 0);
    return 0;
}
