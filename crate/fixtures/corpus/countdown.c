int main() {
    int i = 10;
    int s = 0;
    while (i > 0) {
        s = s + 1;
        i = i - 1;
    }
    assert(s == 10);
    return 0;
}
